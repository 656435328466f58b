//! Directed rounding without touching the FPU control word.
//!
//! Every basic IEEE operation (`+ - * / sqrt`) is correctly rounded to
//! nearest, so the exact result lies within one ulp of the computed one and
//! stepping to the neighbouring float gives a one-sided bound. Elementary
//! functions from the platform libm are assumed to be accurate to within
//! two ulps; the `*_up`/`*_down` wrappers step three ulps outward.
//!
//! Bulk kernels (matrix products, FFT) do not use these wrappers; they add an
//! a-priori bound of the form `gamma(n) * |A||B|` that holds for any
//! summation order, which keeps results independent of threading.

/// Unit roundoff for binary64 (round to nearest).
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

#[inline]
pub fn up(x: f64) -> f64 {
    x.next_up()
}

#[inline]
pub fn down(x: f64) -> f64 {
    x.next_down()
}

#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    up(a + b)
}

#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    down(a + b)
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    up(a - b)
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    down(a - b)
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    up(a * b)
}

#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    down(a * b)
}

#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    up(a / b)
}

#[inline]
pub fn div_down(a: f64, b: f64) -> f64 {
    down(a / b)
}

#[inline]
pub fn sqrt_up(a: f64) -> f64 {
    up(a.sqrt())
}

#[inline]
pub fn sqrt_down(a: f64) -> f64 {
    let s = a.sqrt();
    if s == 0.0 {
        0.0
    } else {
        down(s).max(0.0)
    }
}

#[inline]
fn outward_up(x: f64) -> f64 {
    up(up(up(x)))
}

#[inline]
fn outward_down(x: f64) -> f64 {
    down(down(down(x)))
}

pub fn exp_up(x: f64) -> f64 {
    outward_up(x.exp())
}

pub fn exp_down(x: f64) -> f64 {
    outward_down(x.exp()).max(0.0)
}

pub fn ln_up(x: f64) -> f64 {
    outward_up(x.ln())
}

pub fn ln_down(x: f64) -> f64 {
    outward_down(x.ln())
}

/// Upper bound for `|z|` of a floating complex number.
#[inline]
pub fn hypot_up(re: f64, im: f64) -> f64 {
    outward_up(re.hypot(im))
}

/// Lower bound for `|z|`.
#[inline]
pub fn hypot_down(re: f64, im: f64) -> f64 {
    outward_down(re.hypot(im)).max(0.0)
}

/// `gamma(n) = n u / (1 - n u)`, rounded up. Bounds the relative error of
/// an `n`-term floating dot product evaluated in any order (with or without
/// fused multiply-add).
pub fn gamma(n: usize) -> f64 {
    let nu = mul_up(n as f64, UNIT_ROUNDOFF);
    assert!(nu < 0.5, "gamma({n}) undefined in binary64");
    div_up(nu, sub_down(1.0, nu))
}

/// Upward bound for a sum of nonnegative floats.
pub fn sum_up(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, add_up)
}
