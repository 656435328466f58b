//! Rigorous enclosures for the spectra of transfer operators of analytic
//! expanding circle maps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball;
pub mod maps;
pub mod fft;
pub mod galerkin;
pub mod bounds;
pub mod schur;
pub mod svd;
pub mod contour;
pub mod pipeline;
