//! Radix-2 FFT with an a-posteriori enclosure of the exact DFT.
//!
//! Convention: `X_j = sum_m x_m exp(-2 pi i j m / N)`.
//!
//! The error model is the normwise bound for iterative Cooley-Tukey in
//! floating point: with twiddle factors accurate to `mu` and
//! `eta = mu + gamma(4) (sqrt 2 + mu)`, the computed transform satisfies
//! `||fl(X) - X||_2 <= (L eta / (1 - L eta)) ||X||_2`, `L = log2 N`. Since
//! `||X||_2 = sqrt(N) ||x||_2` this gives a uniform per-entry bound. The
//! twiddles are computed as balls, so `mu` is certified rather than assumed.

use num_complex::Complex64;

use crate::ball::{round, BallScalar};

#[derive(Debug, thiserror::Error)]
pub enum FftError {
    #[error("FFT size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("expected {expected} samples, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value in FFT input or output")]
    NonFinite,
}

#[derive(Clone, Debug)]
pub struct FftPlan {
    size: usize,
    twiddles: Vec<Complex64>,
    /// Relative error factor `L eta / (1 - L eta)`.
    factor: f64,
}

impl FftPlan {
    pub fn new(size: usize) -> Result<Self, FftError> {
        if size == 0 || !size.is_power_of_two() {
            return Err(FftError::NotPowerOfTwo(size));
        }
        let half = size / 2;
        let mut twiddles = Vec::with_capacity(half);
        let mut mu = 0.0f64;
        let minus_two_pi_i = BallScalar::exact(Complex64::new(0.0, -2.0)) * BallScalar::pi();
        for k in 0..half {
            let w = (minus_two_pi_i * BallScalar::ratio(k as i64, size as i64))
                .exp()
                .map_err(|_| FftError::NonFinite)?;
            twiddles.push(w.mid);
            mu = mu.max(w.rad);
        }
        let levels = size.trailing_zeros() as f64;
        let eta = round::add_up(
            mu,
            round::mul_up(round::gamma(4), round::add_up(std::f64::consts::SQRT_2.next_up(), mu)),
        );
        let le = round::mul_up(levels, eta);
        let factor = round::div_up(le, round::sub_down(1.0, le));
        Ok(Self { size, twiddles, factor })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Floating forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        let n = self.size;
        assert_eq!(data.len(), n);
        let bits = n.trailing_zeros();
        if n > 1 {
            for i in 0..n {
                let j = i.reverse_bits() >> (usize::BITS - bits);
                if i < j {
                    data.swap(i, j);
                }
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let w = self.twiddles[k * stride];
                    let a = data[start + k];
                    let b = data[start + k + len / 2] * w;
                    data[start + k] = a + b;
                    data[start + k + len / 2] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// Enclosure of the exact DFT of every sequence in the input balls.
    pub fn transform(&self, samples: &[BallScalar]) -> Result<Vec<BallScalar>, FftError> {
        if samples.len() != self.size {
            return Err(FftError::Length { expected: self.size, got: samples.len() });
        }
        let mut data: Vec<Complex64> = samples.iter().map(|b| b.mid).collect();
        let radius_sum = round::sum_up(samples.iter().map(|b| b.rad));
        let norm2 = round::sqrt_up(round::sum_up(data.iter().map(|z| {
            let a = round::hypot_up(z.re, z.im);
            round::mul_up(a, a)
        })));
        self.forward(&mut data);
        let rounding = round::mul_up(round::mul_up(self.factor, round::sqrt_up(self.size as f64)), norm2);
        let rad = round::add_up(radius_sum, rounding);
        if !rad.is_finite() || data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(FftError::NonFinite);
        }
        Ok(data.into_iter().map(|mid| BallScalar { mid, rad }).collect())
    }
}

/// One-shot validated DFT.
pub fn validated_fft(samples: &[BallScalar], size: usize) -> Result<Vec<BallScalar>, FftError> {
    FftPlan::new(size)?.transform(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_gives_zero_output() {
        let out = validated_fft(&vec![BallScalar::ZERO; 16], 16).unwrap();
        assert!(out.iter().all(|b| b.mid == Complex64::new(0.0, 0.0) && b.rad < 1e-150), "{:?}", out[0]);
    }

    #[test]
    fn pure_tone_lands_in_one_bin() {
        let n = 64;
        let j = 5;
        let samples: Vec<BallScalar> = (0..n)
            .map(|m| {
                let arg = BallScalar::exact(Complex64::new(0.0, 2.0)) * BallScalar::pi() * BallScalar::ratio((j * m) as i64, n as i64);
                arg.exp().unwrap()
            })
            .collect();
        let out = validated_fft(&samples, n).unwrap();
        for (k, b) in out.iter().enumerate() {
            let want = if k == j { Complex64::new(n as f64, 0.0) } else { Complex64::new(0.0, 0.0) };
            assert!(b.contains(want), "bin {k}: {b}");
            assert!(b.rad <= 1e-12 * n as f64);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(FftPlan::new(12), Err(FftError::NotPowerOfTwo(12))));
        assert!(matches!(validated_fft(&[BallScalar::ZERO; 4], 8), Err(FftError::Length { .. })));
    }
}
