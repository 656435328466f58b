//! Singular value enclosures from an approximate SVD.
//!
//! With `E_U = I - U*U`, `E_V = I - V*V` bounded by `alpha, beta < 1` and
//! `U* B V = D + E` (`D` diagonal, `E` with zero diagonal), every singular
//! value of `B` is matched by some index `i` with
//! `(|D_ii| - ||E||) / sqrt((1+alpha)(1+beta)) <= sigma <= (|D_ii| + ||E||) / sqrt((1-alpha)(1-beta))`.
//!
//! Complex diagonal entries are handled by absorbing their phases into `V`,
//! which leaves `||E_V||` and the entrywise moduli of `E` unchanged; hence
//! `|D_ii|` enters instead of `D_ii`.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ball::{round, BallError, BallMatrix};

#[derive(Debug, thiserror::Error)]
pub enum SvdError {
    #[error(transparent)]
    Ball(#[from] BallError),
    #[error("matrix is not square: {0:?}")]
    NotSquare((usize, usize)),
    #[error("floating SVD failed")]
    NoConvergence,
    #[error("approximate singular vectors are not orthogonal enough (alpha = {alpha:e}, beta = {beta:e})")]
    OrthogonalityTooWeak { alpha: f64, beta: f64 },
    #[error("smallest singular value lower bound is not positive ({0:e})")]
    ThetaNonpositive(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdCertificate {
    /// Lower and upper bounds, one pair per diagonal index (no ordering implied).
    pub intervals: Vec<(f64, f64)>,
    /// Minimum of the (unclamped) lower bounds.
    pub theta: f64,
    /// Minimum of the upper bounds: an upper bound for the smallest singular value.
    pub sigma_min_upper: f64,
    pub alpha_u: f64,
    pub beta_v: f64,
    pub e_sigma: f64,
}

pub fn certify_svd(b: &BallMatrix) -> Result<SvdCertificate, SvdError> {
    let (n, m) = b.shape();
    if n != m {
        return Err(SvdError::NotSquare(b.shape()));
    }
    if n == 0 {
        return Ok(SvdCertificate {
            intervals: vec![],
            theta: f64::INFINITY,
            sigma_min_upper: f64::INFINITY,
            alpha_u: 0.0,
            beta_v: 0.0,
            e_sigma: 0.0,
        });
    }
    let centers: Mat<Complex64> = b.centers().to_owned();
    let svd = centers.svd().map_err(|_| SvdError::NoConvergence)?;
    let u = BallMatrix::from_exact(svd.U().to_owned());
    let v = BallMatrix::from_exact(svd.V().to_owned());
    let ident = BallMatrix::identity(n);
    let uh = u.adjoint();
    let alpha = ident.sub(&uh.matmul(&u)?)?.spectral_norm_upper(None)?;
    let beta = ident.sub(&v.adjoint().matmul(&v)?)?.spectral_norm_upper(None)?;
    if !(alpha < 1.0 && beta < 1.0) {
        return Err(SvdError::OrthogonalityTooWeak { alpha, beta });
    }
    let sigma = uh.matmul(b)?.matmul(&v)?;
    let off = BallMatrix::from_fn(n, n, |i, j| if i == j { Default::default() } else { sigma.get(i, j) })?;
    let e_sigma = off.spectral_norm_upper(None)?;

    let lower_scale = round::sqrt_up(round::mul_up(round::add_up(1.0, alpha), round::add_up(1.0, beta)));
    let upper_scale = round::sqrt_down(round::mul_down(round::sub_down(1.0, alpha), round::sub_down(1.0, beta)));
    let mut intervals = Vec::with_capacity(n);
    let mut theta = f64::INFINITY;
    let mut sigma_min_upper = f64::INFINITY;
    for i in 0..n {
        let d = sigma.get(i, i);
        let lo = round::div_down(round::sub_down(d.abs_lower(), e_sigma), lower_scale);
        let hi = round::div_up(round::add_up(d.abs_upper(), e_sigma), upper_scale);
        theta = theta.min(lo);
        sigma_min_upper = sigma_min_upper.min(hi);
        intervals.push((lo.max(0.0), hi));
    }
    Ok(SvdCertificate { intervals, theta, sigma_min_upper, alpha_u: alpha, beta_v: beta, e_sigma })
}

/// Certified `theta <= sigma_min(B')` for every member `B'`, so that
/// `||B'^{-1}|| <= 1 / theta`.
pub fn smallest_sv_lower(b: &BallMatrix) -> Result<f64, SvdError> {
    let cert = certify_svd(b)?;
    if cert.theta > 0.0 {
        Ok(cert.theta)
    } else {
        Err(SvdError::ThetaNonpositive(cert.theta))
    }
}
