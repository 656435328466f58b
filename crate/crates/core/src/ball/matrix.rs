use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::round::{self, gamma};
use super::{BallError, BallScalar};

/// Entrywise midpoint-radius enclosure of a set of complex matrices.
///
/// Centers and radii are stored as dense faer matrices. All products go
/// through sequential real gemms so the floating centers do not depend on
/// the size of any thread pool.
#[derive(Clone, Debug, PartialEq)]
pub struct BallMatrix {
    centers: Mat<Complex64>,
    radii: Mat<f64>,
}

impl BallMatrix {
    pub fn new(centers: Mat<Complex64>, radii: Mat<f64>) -> Result<Self, BallError> {
        if centers.shape() != radii.shape() {
            return Err(BallError::ShapeMismatch {
                op: "new",
                left: centers.shape(),
                right: radii.shape(),
            });
        }
        let m = Self { centers, radii };
        m.validate()?;
        Ok(m)
    }

    pub fn from_exact(centers: Mat<Complex64>) -> Self {
        let radii = Mat::zeros(centers.nrows(), centers.ncols());
        Self { centers, radii }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> BallScalar,
    ) -> Result<Self, BallError> {
        let mut centers = Mat::zeros(rows, cols);
        let mut radii = Mat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                let b = f(i, j);
                centers[(i, j)] = b.mid;
                radii[(i, j)] = b.rad;
            }
        }
        Self::new(centers, radii)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { centers: Mat::zeros(rows, cols), radii: Mat::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_exact(Mat::identity(n, n))
    }

    fn validate(&self) -> Result<(), BallError> {
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                let c = self.centers[(i, j)];
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(BallError::NonFinite);
                }
                let r = self.radii[(i, j)];
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(BallError::BadRadius { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.centers.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.centers.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.centers.shape()
    }

    pub fn centers(&self) -> MatRef<'_, Complex64> {
        self.centers.as_ref()
    }

    pub fn radii(&self) -> MatRef<'_, f64> {
        self.radii.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> BallScalar {
        BallScalar { mid: self.centers[(i, j)], rad: self.radii[(i, j)] }
    }

    pub fn max_radius(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                m = m.max(self.radii[(i, j)]);
            }
        }
        m
    }

    /// Does `m` belong to the enclosure? Conservative: `false` on ties
    /// within rounding of the distance computation.
    pub fn contains(&self, m: MatRef<'_, Complex64>) -> bool {
        if m.shape() != self.shape() {
            return false;
        }
        (0..self.ncols()).all(|j| (0..self.nrows()).all(|i| self.get(i, j).contains(m[(i, j)])))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            centers: self.centers.adjoint().to_owned(),
            radii: self.radii.transpose().to_owned(),
        }
    }

    /// Adds `extra` to every radius.
    pub fn inflate(&self, extra: f64) -> Self {
        let radii = Mat::from_fn(self.nrows(), self.ncols(), |i, j| round::add_up(self.radii[(i, j)], extra));
        Self { centers: self.centers.clone(), radii }
    }

    /// Entrywise upper bound on the modulus of every member.
    pub fn abs_upper(&self) -> Mat<f64> {
        Mat::from_fn(self.nrows(), self.ncols(), |i, j| self.get(i, j).abs_upper())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, BallError> {
        self.combine(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, BallError> {
        self.combine(rhs, "sub", |a, b| a - b)
    }

    fn combine(
        &self,
        rhs: &Self,
        op: &'static str,
        f: impl Fn(BallScalar, BallScalar) -> BallScalar,
    ) -> Result<Self, BallError> {
        if self.shape() != rhs.shape() {
            return Err(BallError::ShapeMismatch { op, left: self.shape(), right: rhs.shape() });
        }
        Self::from_fn(self.nrows(), self.ncols(), |i, j| f(self.get(i, j), rhs.get(i, j)))
            .map_err(|_| BallError::NonFinite)
    }

    /// `z I - self` for a square matrix.
    pub fn shifted_negation(&self, z: BallScalar) -> Result<Self, BallError> {
        let n = self.nrows();
        if n != self.ncols() {
            return Err(BallError::ShapeMismatch { op: "shift", left: self.shape(), right: (n, n) });
        }
        Self::from_fn(n, n, |i, j| {
            let a = self.get(i, j);
            if i == j {
                z - a
            } else {
                -a
            }
        })
        .map_err(|_| BallError::NonFinite)
    }

    /// Enclosure of all products `A'B'` with `A' in self`, `B' in rhs`.
    ///
    /// Centers come from real gemms of length `2k`; each real and imaginary
    /// part then carries at most `gamma(2k) |A_c||B_c|` error, whatever the
    /// accumulation order inside the kernel. Radii are
    /// `|A_c|(B_r + c|B_c|) + A_r(|B_c| + B_r)` with `c = sqrt(2) gamma(2k)`,
    /// evaluated as one nonnegative gemm and inflated by its own a-priori
    /// error factor.
    pub fn matmul(&self, rhs: &Self) -> Result<Self, BallError> {
        let (n, k) = self.shape();
        let (k2, m) = rhs.shape();
        if k != k2 {
            return Err(BallError::ShapeMismatch { op: "matmul", left: self.shape(), right: rhs.shape() });
        }
        if k == 0 {
            return Ok(Self::zeros(n, m));
        }
        let ac = &self.centers;
        let bc = &rhs.centers;

        let lhs_re = Mat::from_fn(n, 2 * k, |i, p| if p < k { ac[(i, p)].re } else { -ac[(i, p - k)].im });
        let lhs_im = Mat::from_fn(n, 2 * k, |i, p| if p < k { ac[(i, p)].im } else { ac[(i, p - k)].re });
        let rhs_stack = Mat::from_fn(2 * k, m, |p, j| if p < k { bc[(p, j)].re } else { bc[(p - k, j)].im });
        let mut re = Mat::<f64>::zeros(n, m);
        let mut im = Mat::<f64>::zeros(n, m);
        matmul(re.as_mut(), Accum::Replace, lhs_re.as_ref(), rhs_stack.as_ref(), 1.0, Par::Seq);
        matmul(im.as_mut(), Accum::Replace, lhs_im.as_ref(), rhs_stack.as_ref(), 1.0, Par::Seq);

        let c = round::mul_up(std::f64::consts::SQRT_2.next_up(), gamma(2 * k));
        let abs_a = Mat::from_fn(n, k, |i, p| round::hypot_up(ac[(i, p)].re, ac[(i, p)].im));
        let abs_b = Mat::from_fn(k, m, |p, j| round::hypot_up(bc[(p, j)].re, bc[(p, j)].im));
        let lhs_abs = Mat::from_fn(n, 2 * k, |i, p| if p < k { abs_a[(i, p)] } else { self.radii[(i, p - k)] });
        let rhs_abs = Mat::from_fn(2 * k, m, |p, j| {
            if p < k {
                round::add_up(rhs.radii[(p, j)], round::mul_up(c, abs_b[(p, j)]))
            } else {
                round::add_up(abs_b[(p - k, j)], rhs.radii[(p - k, j)])
            }
        });
        let mut rad = Mat::<f64>::zeros(n, m);
        matmul(rad.as_mut(), Accum::Replace, lhs_abs.as_ref(), rhs_abs.as_ref(), 1.0, Par::Seq);

        // A nonnegative 2k-term sum is computed with relative error at most
        // gamma(2k); dividing by 1 - gamma(2k) is covered by 1 + 2 gamma(2k).
        let factor = round::add_up(1.0, round::mul_up(2.0, gamma(2 * k + 1)));
        // Gradual underflow contributes an absolute error per product.
        let floor = round::mul_up((4 * k) as f64, f64::MIN_POSITIVE);
        let radii = Mat::from_fn(n, m, |i, j| round::add_up(round::mul_up(rad[(i, j)], factor), floor));
        let centers = Mat::from_fn(n, m, |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
        let out = Self { centers, radii };
        out.validate().map_err(|_| BallError::NonFinite)?;
        Ok(out)
    }

    /// Upper bound on the spectral norm of every member, by the Perron-type
    /// estimate `||A||_2^2 <= max_i (|A|^T |A| v)_i / v_i` for any positive `v`
    /// (`v = 1` when `weights` is `None`).
    pub fn spectral_norm_upper(&self, weights: Option<&[f64]>) -> Result<f64, BallError> {
        let (n, m) = self.shape();
        if n == 0 || m == 0 {
            return Ok(0.0);
        }
        let ones;
        let v = match weights {
            Some(v) => v,
            None => {
                ones = vec![1.0; m];
                &ones
            }
        };
        if v.len() != m {
            return Err(BallError::WeightLength { got: v.len(), expected: m });
        }
        if let Some(index) = v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(BallError::NonPositiveWeight { index });
        }
        let abs = self.abs_upper();
        let w = nonneg_matvec_up(abs.as_ref(), v);
        let y = nonneg_matvec_up(abs.transpose(), &w);
        let mut q = 0.0f64;
        for (yi, vi) in y.iter().zip(v) {
            q = q.max(round::div_up(*yi, *vi));
        }
        if !q.is_finite() {
            return Err(BallError::NonFinite);
        }
        Ok(round::sqrt_up(q))
    }

    /// A positive weight vector close to the Perron vector of `|A|^T|A|`,
    /// from a few power iterations. Not rigorous by itself; any positive
    /// vector is a valid input to [`Self::spectral_norm_upper`].
    pub fn perron_weights(&self, iterations: usize) -> Vec<f64> {
        let abs = self.abs_upper();
        let mut v = vec![1.0; self.ncols()];
        for _ in 0..iterations {
            let w = nonneg_matvec_up(abs.as_ref(), &v);
            let mut y = nonneg_matvec_up(abs.transpose(), &w);
            let top = y.iter().cloned().fold(0.0f64, f64::max);
            if !(top > 0.0 && top.is_finite()) {
                break;
            }
            for x in &mut y {
                // keep entries strictly positive so the bound stays applicable
                *x = (*x / top).max(1e-3);
            }
            v = y;
        }
        v
    }

    /// Induced l1 operator norm bound (maximum column sum of moduli), valid
    /// for every member. This is the norm on coefficient sequences used by
    /// the Galerkin matrices.
    pub fn l1_operator_norm_upper(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.ncols() {
            let s = round::sum_up((0..self.nrows()).map(|i| self.get(i, j).abs_upper()));
            best = best.max(s);
        }
        best
    }

    /// SHA-256 over the shape and the little-endian bytes of centers and
    /// radii in row-major order.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.nrows() as u64).to_le_bytes());
        h.update((self.ncols() as u64).to_le_bytes());
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                let c = self.centers[(i, j)];
                h.update(c.re.to_le_bytes());
                h.update(c.im.to_le_bytes());
                h.update(self.radii[(i, j)].to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// `||B||_l1 <= sqrt(n) ||B||_2` for n x n matrices under the column-sum convention.
pub fn l1_norm_from_l2(l2_bound: f64, n: usize) -> f64 {
    assert!(l2_bound >= 0.0 && n >= 1);
    if n == 1 {
        return l2_bound;
    }
    round::mul_up(round::sqrt_up(n as f64), l2_bound)
}

/// Upper bound on `A v` for entrywise nonnegative `A` and `v`.
fn nonneg_matvec_up(a: MatRef<'_, f64>, v: &[f64]) -> Vec<f64> {
    let (n, m) = a.shape();
    let factor = round::add_up(1.0, round::mul_up(2.0, gamma(m + 1)));
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for (j, vj) in v.iter().enumerate() {
                s += a[(i, j)] * vj;
            }
            round::add_up(round::mul_up(s, factor), round::mul_up(m as f64, f64::MIN_POSITIVE))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn exact(rows: &[&[f64]]) -> BallMatrix {
        BallMatrix::from_exact(Mat::from_fn(rows.len(), rows[0].len(), |i, j| c(rows[i][j])))
    }

    #[test]
    fn small_integer_product_is_exact_up_to_rounding_scale() {
        let a = exact(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = exact(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let p = a.matmul(&b).unwrap();
        let want = [[19.0, 22.0], [43.0, 50.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(p.centers()[(i, j)], c(want[i][j]));
                assert!(p.radii()[(i, j)] < 1e-12);
            }
        }
    }

    #[test]
    fn exact_integer_sum_has_zero_radius_inflation_only_from_rounding_slack() {
        let a = exact(&[&[1.0, -2.0], &[3.0, 4.0]]);
        let s = a.add(&a).unwrap();
        assert_eq!(s.centers()[(1, 0)], c(6.0));
        assert!(s.max_radius() < 1e-14);
    }

    #[test]
    fn identity_product_keeps_matrix() {
        let a = BallMatrix::from_fn(3, 3, |i, j| BallScalar {
            mid: Complex64::new(i as f64 - j as f64, 0.5),
            rad: 1e-9,
        })
        .unwrap();
        let p = BallMatrix::identity(3).matmul(&a).unwrap();
        assert_eq!(p.centers(), a.centers());
        for i in 0..3 {
            for j in 0..3 {
                let r = p.radii()[(i, j)];
                assert!((1e-9..1e-9 + 1e-14).contains(&r));
            }
        }
    }

    #[test]
    fn perron_bound_examples() {
        let id = BallMatrix::identity(4);
        assert!((id.spectral_norm_upper(None).unwrap() - 1.0).abs() < 1e-14);
        let d = exact(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]);
        let bound = d.spectral_norm_upper(None).unwrap();
        assert!((3.0..3.0 + 1e-13).contains(&bound));
        let ones = exact(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let bound = ones.spectral_norm_upper(None).unwrap();
        assert!((2.0..2.0 + 1e-13).contains(&bound));
        assert!(matches!(
            id.spectral_norm_upper(Some(&[1.0, 0.0, 1.0, 1.0])),
            Err(BallError::NonPositiveWeight { index: 1 })
        ));
    }

    #[test]
    fn l1_from_l2_examples() {
        assert_eq!(l1_norm_from_l2(1.0, 1), 1.0);
        let v = l1_norm_from_l2(2.0, 4);
        assert!((4.0..4.0 + 1e-14).contains(&v));
    }

    #[test]
    fn nonfinite_product_is_an_error() {
        let a = exact(&[&[1e200, 1e200]]);
        let b = exact(&[&[1e200], &[1e200]]);
        assert!(matches!(a.matmul(&b), Err(BallError::NonFinite)));
        let bad = BallMatrix::new(Mat::zeros(1, 1), Mat::from_fn(1, 1, |_, _| -1.0));
        assert!(matches!(bad, Err(BallError::BadRadius { .. })));
    }

    #[test]
    fn hash_changes_with_radius() {
        let a = BallMatrix::identity(2);
        assert_ne!(a.hash_hex(), a.inflate(1e-300).hash_hex());
        assert_eq!(a.hash_hex(), a.clone().hash_hex());
    }
}
