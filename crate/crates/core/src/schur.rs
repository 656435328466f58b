//! Certified approximate Schur factorization `M ~ Z T Z*` of a ball matrix,
//! and transfer of resolvent bounds from `T` to every member of the ball.

use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ball::{round, BallError, BallMatrix, BallScalar};

#[derive(Debug, thiserror::Error)]
pub enum SchurError {
    #[error(transparent)]
    Ball(#[from] BallError),
    #[error("matrix is not square: {0:?}")]
    NotSquare((usize, usize)),
    #[error("floating Schur iteration did not converge")]
    NoConvergence,
    #[error("certified defect epsilon = {0:e} is not below 1")]
    EpsilonTooLarge(f64),
    #[error("resolvent transfer gate failed: 2 eps (1+eps)^2 r max(1,|z|) = {0:e} >= 1/2")]
    GateFailed(f64),
    #[error("delta0 = {delta0:e} is below the required {threshold:e}")]
    Delta0TooSmall { delta0: f64, threshold: f64 },
}

/// Audit values behind a [`CertifiedSchur`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurAudit {
    /// Bound on `||M' - Z T Z*||` over members `M'`.
    pub factorization_defect: f64,
    /// Bound on `||I - Z Z*||`.
    pub orthogonality_defect: f64,
    pub z_norm: f64,
    pub z_inv_norm: f64,
    /// Perron bound of `||T||` before clamping to 1.
    pub t_norm: f64,
    pub c0_clamped: bool,
}

#[derive(Clone, Debug)]
pub struct CertifiedSchur {
    pub z: Mat<Complex64>,
    /// Upper triangular; entries below the diagonal are exact zeros.
    pub t: Mat<Complex64>,
    pub epsilon: f64,
    pub c0: f64,
    pub source: String,
    pub audit: SchurAudit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurSummary {
    pub epsilon: f64,
    pub c0: f64,
    pub source: String,
    pub audit: SchurAudit,
}

impl CertifiedSchur {
    pub fn summary(&self) -> SchurSummary {
        SchurSummary { epsilon: self.epsilon, c0: self.c0, source: self.source.clone(), audit: self.audit }
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// `T` as an exact ball matrix.
    pub fn t_ball(&self) -> BallMatrix {
        BallMatrix::from_exact(self.t.clone())
    }
}

/// Floating complex Schur form of the centers, then a posteriori bounds
/// valid for the whole ball.
pub fn certify_schur(m: &BallMatrix) -> Result<CertifiedSchur, SchurError> {
    let (n, cols) = m.shape();
    if n != cols {
        return Err(SchurError::NotSquare(m.shape()));
    }
    let (z, t) = floating_schur(m)?;
    certify_factors(m, z, t)
}

fn floating_schur(m: &BallMatrix) -> Result<(Mat<Complex64>, Mat<Complex64>), SchurError> {
    let n = m.nrows();
    let c = m.centers();
    let dm = DMatrix::from_fn(n, n, |i, j| c[(i, j)]);
    let schur = nalgebra::linalg::Schur::try_new(dm, f64::EPSILON, 100 * n.max(10)).ok_or(SchurError::NoConvergence)?;
    let (q, t) = schur.unpack();
    let z = Mat::from_fn(n, n, |i, j| q[(i, j)]);
    let t = Mat::from_fn(n, n, |i, j| if i > j { Complex64::new(0.0, 0.0) } else { t[(i, j)] });
    if (0..n).any(|j| (0..n).any(|i| !(z[(i, j)].re.is_finite() && z[(i, j)].im.is_finite()))) {
        return Err(SchurError::NoConvergence);
    }
    Ok((z, t))
}

/// Certifies given floating factors `Z`, `T` (with `T` upper triangular)
/// against the ball `m`.
pub fn certify_factors(m: &BallMatrix, z: Mat<Complex64>, t: Mat<Complex64>) -> Result<CertifiedSchur, SchurError> {
    let n = m.nrows();
    for j in 0..n {
        for i in j + 1..n {
            if t[(i, j)] != Complex64::new(0.0, 0.0) {
                return Err(SchurError::NoConvergence);
            }
        }
    }
    let zb = BallMatrix::from_exact(z.clone());
    let tb = BallMatrix::from_exact(t.clone());
    let zt = zb.matmul(&tb)?;
    let recon = zt.matmul(&zb.adjoint())?;
    let e_m = m.sub(&recon)?;
    let eps_m = sharp_norm(&e_m)?;
    let e_z = BallMatrix::identity(n).sub(&zb.matmul(&zb.adjoint())?)?;
    let eps_z = sharp_norm(&e_z)?;
    if !(eps_z < 1.0) {
        return Err(SchurError::EpsilonTooLarge(eps_z));
    }
    // Z Z* = I - E_Z, so ||Z||^2 <= 1 + ||E_Z|| and Z^{-1} = Z* (I - E_Z)^{-1}.
    let z_norm = round::sqrt_up(round::add_up(1.0, eps_z));
    let z_inv_norm = round::div_up(z_norm, round::sub_down(1.0, eps_z));
    let epsilon = eps_m
        .max(eps_z)
        .max(round::sub_up(z_norm, 1.0))
        .max(round::sub_up(z_inv_norm, 1.0))
        .max(f64::MIN_POSITIVE);
    if !(epsilon < 1.0) {
        return Err(SchurError::EpsilonTooLarge(epsilon));
    }
    let t_norm = sharp_norm(&tb)?;
    let c0 = t_norm.max(1.0);
    Ok(CertifiedSchur {
        z,
        t,
        epsilon,
        c0,
        source: m.hash_hex(),
        audit: SchurAudit {
            factorization_defect: eps_m,
            orthogonality_defect: eps_z,
            z_norm,
            z_inv_norm,
            t_norm,
            c0_clamped: t_norm < 1.0,
        },
    })
}

/// Perron bound with a refined weight vector, falling back to ones.
fn sharp_norm(a: &BallMatrix) -> Result<f64, BallError> {
    let plain = a.spectral_norm_upper(None)?;
    let weights = a.perron_weights(8);
    Ok(a.spectral_norm_upper(Some(&weights)).map(|r| r.min(plain)).unwrap_or(plain))
}

/// `(1 + eps)^2`, rounded up.
fn one_plus_eps_sq(eps: f64) -> f64 {
    let a = round::add_up(1.0, eps);
    round::mul_up(a, a)
}

/// Upper bound for `||(z - M')^{-1}||` over all members `M'`, given a bound
/// `r_t >= ||(z - T)^{-1}||`.
pub fn resolvent_transfer(cs: &CertifiedSchur, z: Complex64, r_t: f64) -> Result<f64, SchurError> {
    transfer_bound(cs.epsilon, z, r_t)
}

pub(crate) fn transfer_bound(eps: f64, z: Complex64, r_t: f64) -> Result<f64, SchurError> {
    let a = one_plus_eps_sq(eps);
    let base = round::mul_up(round::mul_up(2.0 * eps, a), r_t);
    let gate = round::mul_up(base, round::hypot_up(z.re, z.im).max(1.0));
    if !(gate < 0.5) {
        return Err(SchurError::GateFailed(gate));
    }
    let num = round::mul_up(round::mul_up(2.0, a), r_t);
    Ok(round::div_up(num, round::sub_down(1.0, base)))
}

/// Checks `delta0 >= 4 eps (eps + C0 (1+eps)^2) (1+eps)^2` and returns the
/// usable `delta = delta0 / (4 (1+eps)^2)`, rounded down.
pub fn pseudospectrum_gate(cs: &CertifiedSchur, delta0: f64) -> Result<f64, SchurError> {
    gate_delta(cs.epsilon, cs.c0, delta0)
}

pub(crate) fn gate_delta(eps: f64, c0: f64, delta0: f64) -> Result<f64, SchurError> {
    let a = one_plus_eps_sq(eps);
    let inner = round::add_up(eps, round::mul_up(c0, a));
    let threshold = round::mul_up(round::mul_up(round::mul_up(4.0, eps), inner), a);
    if !(delta0 >= threshold) {
        return Err(SchurError::Delta0TooSmall { delta0, threshold });
    }
    Ok(round::div_down(delta0, round::mul_up(4.0, a)))
}

/// Diagonal of `T`, i.e. the spectrum of the triangular factor.
pub fn eigenvalue_disks(cs: &CertifiedSchur) -> Vec<BallScalar> {
    (0..cs.dim()).map(|i| BallScalar::exact(cs.t[(i, i)])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triangular_input_is_certified_tightly() {
        let t = Mat::from_fn(3, 3, |i, j| if i <= j { c(1.0 + i as f64, j as f64 * 0.5) } else { c(0.0, 0.0) });
        let cs = certify_schur(&BallMatrix::from_exact(t.clone())).unwrap();
        assert!(cs.epsilon < 1e-13, "{}", cs.epsilon);
        let diag: Vec<Complex64> = eigenvalue_disks(&cs).iter().map(|b| b.mid).collect();
        for i in 0..3 {
            assert!(diag.iter().any(|d| (*d - t[(i, i)]).norm() < 1e-12));
        }
    }

    #[test]
    fn companion_matrix_eigenvalues() {
        // (z - 1)(z - 2) = z^2 - 3z + 2
        let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(3.0, 0.0),
            (0, 1) => c(-2.0, 0.0),
            (1, 0) => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let cs = certify_schur(&BallMatrix::from_exact(m)).unwrap();
        let mut d: Vec<f64> = eigenvalue_disks(&cs).iter().map(|b| b.mid.re).collect();
        d.sort_by(f64::total_cmp);
        assert!((d[0] - 1.0).abs() < 1e-12 && (d[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn transfer_and_gate_formulas() {
        let r = transfer_bound(0.0, c(0.5, 0.0), 10.0).unwrap();
        assert!((20.0..20.0 * (1.0 + 1e-14)).contains(&r));
        assert!(matches!(transfer_bound(0.3, c(1.0, 0.0), 10.0), Err(SchurError::GateFailed(_))));
        // threshold is about 4 * 1e-10 * 50 = 2e-8
        let d = gate_delta(1e-10, 50.0, 1e-7).unwrap();
        assert!((d / 2.5e-8 - 1.0).abs() < 1e-6);
        assert!(d <= 1e-7 / 4.0);
        assert!(matches!(gate_delta(1e-10, 50.0, 1e-8), Err(SchurError::Delta0TooSmall { .. })));
        let q = gate_delta(0.0, 1.0, 1.0).unwrap();
        assert!(q <= 0.25 && q > 0.25 * (1.0 - 1e-14));
    }
}
