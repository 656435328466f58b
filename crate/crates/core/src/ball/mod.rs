//! Midpoint-radius arithmetic for complex scalars and matrices.

pub mod dump;
mod matrix;
pub mod round;
mod scalar;

pub use matrix::{l1_norm_from_l2, BallMatrix};
pub use scalar::BallScalar;

#[derive(Debug, thiserror::Error)]
pub enum BallError {
    #[error("non-finite value in ball enclosure")]
    NonFinite,
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("divisor ball contains zero")]
    ZeroInDivisor,
    #[error("expected a positive real ball")]
    NotPositiveReal,
    #[error("negative or non-finite radius at ({row}, {col})")]
    BadRadius { row: usize, col: usize },
    #[error("weight vector entry {index} is not strictly positive")]
    NonPositiveWeight { index: usize },
    #[error("weight vector has length {got}, expected {expected}")]
    WeightLength { got: usize, expected: usize },
    #[error("malformed matrix dump: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
