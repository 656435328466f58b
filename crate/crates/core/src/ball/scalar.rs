use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::round::{self, UNIT_ROUNDOFF as U};
use super::BallError;

/// Closed complex disk `{x : |x - mid| <= rad}`.
///
/// Arithmetic operators never fail; a result may become non-finite on
/// overflow. Call [`BallScalar::finite`] before a value feeds anything that
/// is claimed as a bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BallScalar {
    pub mid: Complex64,
    pub rad: f64,
}

impl BallScalar {
    pub const ZERO: BallScalar = BallScalar { mid: Complex64::new(0.0, 0.0), rad: 0.0 };
    pub const ONE: BallScalar = BallScalar { mid: Complex64::new(1.0, 0.0), rad: 0.0 };

    pub fn try_new(mid: Complex64, rad: f64) -> Result<Self, BallError> {
        Self { mid, rad }.finite()
    }

    pub fn exact(mid: Complex64) -> Self {
        Self { mid, rad: 0.0 }
    }

    pub fn real(x: f64) -> Self {
        Self::exact(Complex64::new(x, 0.0))
    }

    pub fn real_with_radius(x: f64, rad: f64) -> Self {
        Self { mid: Complex64::new(x, 0.0), rad }
    }

    /// Enclosure of pi.
    pub fn pi() -> Self {
        Self::real_with_radius(std::f64::consts::PI, std::f64::consts::PI * f64::EPSILON)
    }

    /// Enclosure of `p / q`.
    pub fn ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        let small = p.unsigned_abs() < (1 << 53) && q.unsigned_abs() < (1 << 53);
        let v = p as f64 / q as f64;
        // With p, q exact in binary64 the quotient is exact iff the fma residual vanishes.
        if small && v.mul_add(q as f64, -(p as f64)) == 0.0 {
            Self::real(v)
        } else {
            Self::real_with_radius(v, round::up(v.abs() * 2.0 * U))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mid.re.is_finite() && self.mid.im.is_finite() && self.rad.is_finite() && self.rad >= 0.0
    }

    pub fn finite(self) -> Result<Self, BallError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(BallError::NonFinite)
        }
    }

    /// Upper bound on `|x|` over the ball.
    pub fn abs_upper(&self) -> f64 {
        round::add_up(round::hypot_up(self.mid.re, self.mid.im), self.rad)
    }

    /// Lower bound on `|x|` over the ball (zero if the ball contains 0).
    pub fn abs_lower(&self) -> f64 {
        round::sub_down(round::hypot_down(self.mid.re, self.mid.im), self.rad).max(0.0)
    }

    /// Upper bound of the real part over the ball.
    pub fn re_upper(&self) -> f64 {
        round::add_up(self.mid.re, self.rad)
    }

    /// Lower bound of the real part over the ball.
    pub fn re_lower(&self) -> f64 {
        round::sub_down(self.mid.re, self.rad)
    }

    /// True only if `z` is certainly inside the ball.
    pub fn contains(&self, z: Complex64) -> bool {
        let dr = round::up((z.re - self.mid.re).abs());
        let di = round::up((z.im - self.mid.im).abs());
        round::hypot_up(dr, di) <= self.rad
    }

    pub fn inflate(self, extra: f64) -> Self {
        Self { mid: self.mid, rad: round::add_up(self.rad, extra) }
    }

    pub fn conj(self) -> Self {
        Self { mid: self.mid.conj(), rad: self.rad }
    }

    pub fn scale(self, s: f64) -> Self {
        let mid = self.mid * s;
        let err = round::mul_up(round::hypot_up(mid.re, mid.im), U);
        Self { mid, rad: round::add_up(round::mul_up(self.rad, s.abs()), err) }
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    /// Enclosure of `{1/x}`; fails if the ball touches zero.
    pub fn inv(self) -> Result<Self, BallError> {
        let m = round::hypot_down(self.mid.re, self.mid.im);
        let lower = round::sub_down(m, self.rad);
        if !(lower > 0.0) {
            return Err(BallError::ZeroInDivisor);
        }
        let norm2 = self.mid.norm_sqr();
        let mid = Complex64::new(self.mid.re / norm2, -self.mid.im / norm2);
        // |1/z - 1/c| <= r / (|z||c|) <= r / ((|c| - r)|c|)
        let spread = round::div_up(self.rad, round::mul_down(lower, m));
        let inv_mod = round::div_up(1.0, m);
        let rounding = round::mul_up(inv_mod, 8.0 * U);
        Self { mid, rad: round::add_up(spread, rounding) }.finite()
    }

    pub fn div(self, rhs: Self) -> Result<Self, BallError> {
        Ok(self * rhs.inv()?)
    }

    /// Integer power by repeated squaring. Negative exponents go through `inv`.
    pub fn powi(self, n: i64) -> Result<Self, BallError> {
        if n < 0 {
            return self.inv()?.powi(-n);
        }
        let mut base = self;
        let mut acc = Self::ONE;
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            e >>= 1;
            if e > 0 {
                base = base.sqr();
            }
        }
        acc.finite()
    }

    /// Complex exponential.
    pub fn exp(self) -> Result<Self, BallError> {
        let scale = self.mid.re.exp();
        let (s, c) = self.mid.im.sin_cos();
        let mid = Complex64::new(scale * c, scale * s);
        let modulus = round::exp_up(self.mid.re);
        // |e^{c+h} - e^c| <= |e^c| (e^{|h|} - 1)
        let spread = round::mul_up(modulus, expm1_up(self.rad));
        let rounding = round::mul_up(modulus, 16.0 * U);
        Self { mid, rad: round::add_up(spread, rounding) }.finite()
    }

    /// `e^x - 1` for a real ball, accurate near zero.
    pub fn exp_m1_real(self) -> Result<Self, BallError> {
        let x = self.real_center()?;
        let mid = x.exp_m1();
        let slope = round::exp_up(round::add_up(x, self.rad));
        let spread = round::mul_up(slope, self.rad);
        let rounding = round::mul_up(mid.abs(), 8.0 * U);
        Self::real_with_radius(mid, round::add_up(spread, round::add_up(rounding, f64::MIN_POSITIVE)))
            .finite()
    }

    /// Natural logarithm of a positive real ball.
    pub fn ln(self) -> Result<Self, BallError> {
        let x = self.real_center()?;
        let lower = round::sub_down(x, self.rad);
        if !(lower > 0.0) {
            return Err(BallError::NotPositiveReal);
        }
        let mid = x.ln();
        // |ln(x +- r) - ln x| <= -ln(1 - r/x)
        let t = round::div_up(self.rad, lower.min(x));
        let spread = if t == 0.0 { 0.0 } else { round::up(round::up(round::up(-(-t).ln_1p()))) };
        let rounding = round::add_up(round::mul_up(mid.abs(), 8.0 * U), f64::MIN_POSITIVE);
        Self::real_with_radius(mid, round::add_up(spread, rounding)).finite()
    }

    /// `self ^ exponent` for a positive real base and a real exponent ball.
    pub fn powf_real(self, exponent: Self) -> Result<Self, BallError> {
        (exponent * self.ln()?).real_part().exp()
    }

    /// Square root of a nonnegative real ball (result is real).
    pub fn sqrt_real(self) -> Result<Self, BallError> {
        let x = self.real_center()?;
        let lo = round::sub_down(x, self.rad).max(0.0);
        let hi = round::add_up(x, self.rad);
        if x < 0.0 {
            return Err(BallError::NotPositiveReal);
        }
        let a = round::sqrt_down(lo);
        let b = round::sqrt_up(hi);
        let mid = 0.5 * (a + b);
        let rad = round::sub_up(b, mid).max(round::sub_up(mid, a));
        Ok(Self::real_with_radius(mid, rad))
    }

    /// Drops the imaginary part of the center, keeping the radius.
    pub fn real_part(self) -> Self {
        Self::real_with_radius(self.mid.re, self.rad)
    }

    fn real_center(&self) -> Result<f64, BallError> {
        if self.mid.im != 0.0 {
            return Err(BallError::NotPositiveReal);
        }
        Ok(self.mid.re)
    }
}

fn expm1_up(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        round::up(round::up(round::up(r.exp_m1())))
    }
}

impl Add for BallScalar {
    type Output = BallScalar;
    fn add(self, rhs: Self) -> Self {
        let mid = self.mid + rhs.mid;
        let err = round::mul_up(round::hypot_up(mid.re, mid.im), U);
        BallScalar { mid, rad: round::add_up(round::add_up(self.rad, rhs.rad), err) }
    }
}

impl Sub for BallScalar {
    type Output = BallScalar;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for BallScalar {
    type Output = BallScalar;
    fn neg(self) -> Self {
        BallScalar { mid: -self.mid, rad: self.rad }
    }
}

impl Mul for BallScalar {
    type Output = BallScalar;
    fn mul(self, rhs: Self) -> Self {
        let mid = self.mid * rhs.mid;
        let a = round::hypot_up(self.mid.re, self.mid.im);
        let b = round::hypot_up(rhs.mid.re, rhs.mid.im);
        // fl(a*b) differs from a*b by at most sqrt(2) gamma_2 |a||b|
        let rounding = round::mul_up(round::mul_up(a, b), 3.0 * U);
        let spread = round::add_up(
            round::add_up(round::mul_up(a, rhs.rad), round::mul_up(self.rad, b)),
            round::mul_up(self.rad, rhs.rad),
        );
        BallScalar { mid, rad: round::add_up(spread, rounding) }
    }
}

impl From<f64> for BallScalar {
    fn from(x: f64) -> Self {
        BallScalar::real(x)
    }
}

impl From<Complex64> for BallScalar {
    fn from(z: Complex64) -> Self {
        BallScalar::exact(z)
    }
}

impl fmt::Display for BallScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {:+}i) ± {:e}", self.mid.re, self.mid.im, self.rad)
    }
}
