//! Analytic expanding circle maps and certification of their expansion
//! annulus.
//!
//! A map `T` is evaluated on complex balls. The annulus certificate records
//! widths `eta < alpha < rho` such that `|T| > e^{2 pi rho}` on the circle
//! `|z| = e^{2 pi eta}` and `|T| < e^{-2 pi rho}` on `|z| = e^{-2 pi eta}`.
//! Together with the domain condition checked by [`CircleMap::domain_ok`]
//! (no zeros of `T` for `1 <= |z| <= e^{2 pi eta}`, no poles for
//! `e^{-2 pi eta} <= |z| <= 1`) this is what the contour-shift estimates in
//! [`crate::galerkin`] and [`crate::bounds`] need.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ball::{round, BallError, BallScalar};

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error(transparent)]
    Ball(#[from] BallError),
    #[error("invalid map: {0}")]
    InvalidSpec(String),
    #[error("annulus certification failed on arc {arc} of the {side} circle: image {image}")]
    CertificationFailed { arc: usize, side: Side, image: BallScalar },
    #[error("need 0 < eta < rho, got eta = {eta}, rho = {rho}")]
    BadWidths { eta: f64, rho: f64 },
    #[error("alpha = {alpha} must lie strictly between eta = {eta} and rho = {rho}")]
    AlphaOutOfRange { eta: f64, alpha: f64, rho: f64 },
    #[error("alpha has not been set on this annulus certificate")]
    AlphaMissing,
    #[error("map has zeros or poles in the annulus: {0}")]
    Domain(String),
    #[error("fixed point certification failed: {0}")]
    FixedPoint(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Outer,
    Inner,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Outer => "outer",
            Side::Inner => "inner",
        })
    }
}

/// User-supplied analytic map. Implementations must return enclosures:
/// for every `z` in the input ball the exact value lies in the output.
pub trait AnalyticMap: Send + Sync + fmt::Debug {
    fn eval(&self, z: BallScalar) -> Result<BallScalar, MapError>;
    fn deriv(&self, z: BallScalar) -> Result<BallScalar, MapError>;
    /// Largest `w` such that `T` has neither zeros nor poles on
    /// `e^{-2 pi w} <= |z| <= e^{2 pi w}` (may be infinite).
    fn regular_width(&self) -> f64;
    /// See [`CircleMap::domain_ok`].
    fn domain_ok(&self, eta: f64) -> bool;
    fn describe(&self) -> String;
}

#[derive(Clone, Debug)]
pub struct Blaschke {
    zeros: Vec<BallScalar>,
    scale: BallScalar,
}

impl Blaschke {
    pub fn new(zeros: Vec<BallScalar>, scale: BallScalar) -> Result<Self, MapError> {
        if zeros.is_empty() {
            return Err(MapError::InvalidSpec("Blaschke product needs at least one factor".into()));
        }
        for (i, a) in zeros.iter().enumerate() {
            a.finite()?;
            if !(a.abs_upper() < 1.0) {
                return Err(MapError::InvalidSpec(format!("zero {i} is not inside the unit disk: {a}")));
            }
        }
        scale.finite()?;
        if !(scale.abs_lower() <= 1.0 && scale.abs_upper() >= 1.0 && scale.rad < 1e-9) {
            return Err(MapError::InvalidSpec(format!("scale {scale} is not unimodular")));
        }
        Ok(Self { zeros, scale })
    }

    pub fn zeros(&self) -> &[BallScalar] {
        &self.zeros
    }

    pub fn scale(&self) -> BallScalar {
        self.scale
    }

    /// The product `z (mu - z) / (1 - conj(mu) z)`, i.e. zeros `(0, mu)` and `C = -1`.
    pub fn two_factor(mu: BallScalar) -> Result<Self, MapError> {
        Self::new(vec![BallScalar::ZERO, mu], -BallScalar::ONE)
    }

    fn factor(a: BallScalar, z: BallScalar) -> Result<BallScalar, MapError> {
        Ok((z - a).div(BallScalar::ONE - a.conj() * z)?)
    }

    fn factor_deriv(a: BallScalar, z: BallScalar) -> Result<BallScalar, MapError> {
        let num = BallScalar::ONE - a.conj() * a;
        let den = (BallScalar::ONE - a.conj() * z).sqr();
        Ok(num.div(den)?)
    }

    fn eval(&self, z: BallScalar) -> Result<BallScalar, MapError> {
        let mut acc = self.scale;
        for &a in &self.zeros {
            acc = acc * Self::factor(a, z)?;
        }
        Ok(acc.finite()?)
    }

    fn deriv(&self, z: BallScalar) -> Result<BallScalar, MapError> {
        let values: Vec<BallScalar> =
            self.zeros.iter().map(|&a| Self::factor(a, z)).collect::<Result<_, _>>()?;
        let mut total = BallScalar::ZERO;
        for (i, &a) in self.zeros.iter().enumerate() {
            let mut term = Self::factor_deriv(a, z)?;
            for (j, v) in values.iter().enumerate() {
                if j != i {
                    term = term * *v;
                }
            }
            total = total + term;
        }
        Ok((self.scale * total).finite()?)
    }

    fn regular_width(&self) -> f64 {
        // Zeros sit at |a|, poles at 1/|a|; a zero at the origin has its pole at infinity.
        let mut w = f64::INFINITY;
        for a in &self.zeros {
            if a.abs_upper() == 0.0 {
                continue;
            }
            let t = round::div_down(-round::ln_up(a.abs_upper()), round::mul_up(2.0, std::f64::consts::PI.next_up()));
            w = w.min(t.max(0.0));
        }
        w
    }

    /// Certified test of the sufficient expansion condition
    /// `sum (1 - |a_i|) / (1 + |a_i|) > 1`.
    pub fn expansion_check(&self) -> bool {
        let mut sum = 0.0;
        for a in &self.zeros {
            let x = a.abs_upper();
            let term = round::div_down(round::sub_down(1.0, x), round::add_up(1.0, x));
            sum = round::add_down(sum, term.max(0.0));
        }
        sum > 1.0
    }
}

/// `T(z) = i z^2 exp((1/2 - b pi)(z - 1/z))` with dyadic `b`.
#[derive(Clone, Debug)]
pub struct PerturbedDoubling {
    b: Ratio<i64>,
    c: BallScalar,
}

impl PerturbedDoubling {
    pub fn new(b: Ratio<i64>) -> Result<Self, MapError> {
        let den = *b.denom();
        if den <= 0 || (den & (den - 1)) != 0 {
            return Err(MapError::InvalidSpec(format!("b = {b} is not a dyadic rational")));
        }
        let b_ball = BallScalar::ratio(*b.numer(), den);
        let c = BallScalar::ratio(1, 2) - b_ball * BallScalar::pi();
        Ok(Self { b, c: c.finite()? })
    }

    pub fn b(&self) -> Ratio<i64> {
        self.b
    }

    fn eval(&self, z: BallScalar) -> Result<BallScalar, MapError> {
        let arg = self.c * (z - z.inv()?);
        let i = BallScalar::exact(Complex64::new(0.0, 1.0));
        Ok((i * z.sqr() * arg.exp()?).finite()?)
    }

    fn deriv(&self, z: BallScalar) -> Result<BallScalar, MapError> {
        let zi = z.inv()?;
        let log_deriv = BallScalar::real(2.0) * zi + self.c * (BallScalar::ONE + zi.sqr());
        Ok((self.eval(z)? * log_deriv).finite()?)
    }
}

#[derive(Clone, Debug)]
pub enum CircleMap {
    Blaschke(Blaschke),
    PerturbedDoubling(PerturbedDoubling),
    /// `z -> z^degree`.
    Power(u32),
    General(Arc<dyn AnalyticMap>),
}

impl CircleMap {
    pub fn doubling() -> Self {
        CircleMap::Power(2)
    }

    pub fn eval(&self, z: BallScalar) -> Result<BallScalar, MapError> {
        match self {
            CircleMap::Blaschke(b) => b.eval(z),
            CircleMap::PerturbedDoubling(p) => p.eval(z),
            CircleMap::Power(d) => Ok(z.powi(*d as i64)?),
            CircleMap::General(g) => g.eval(z),
        }
    }

    pub fn deriv(&self, z: BallScalar) -> Result<BallScalar, MapError> {
        match self {
            CircleMap::Blaschke(b) => b.deriv(z),
            CircleMap::PerturbedDoubling(p) => p.deriv(z),
            CircleMap::Power(d) => Ok((BallScalar::real(*d as f64) * z.powi(*d as i64 - 1)?).finite()?),
            CircleMap::General(g) => g.deriv(z),
        }
    }

    /// Largest `w` with no zeros or poles of `T` on `e^{-2 pi w} <= |z| <= e^{2 pi w}`.
    pub fn regular_width(&self) -> f64 {
        match self {
            CircleMap::Blaschke(b) => b.regular_width(),
            CircleMap::PerturbedDoubling(_) | CircleMap::Power(_) => f64::INFINITY,
            CircleMap::General(g) => g.regular_width(),
        }
    }

    /// `T` has no zeros on `1 <= |z| <= e^{2 pi eta}` and no poles on
    /// `e^{-2 pi eta} <= |z| <= 1`. For Blaschke products this follows from
    /// `|a_i| < 1`; the other built-in maps are zero- and pole-free on
    /// `C \ {0}`.
    pub fn domain_ok(&self, eta: f64) -> bool {
        match self {
            CircleMap::Blaschke(_) | CircleMap::PerturbedDoubling(_) | CircleMap::Power(_) => true,
            CircleMap::General(g) => g.domain_ok(eta),
        }
    }

    /// Canonical text identifying the map, used for hashing.
    pub fn describe(&self) -> String {
        match self {
            CircleMap::Blaschke(b) => {
                let zs: Vec<String> = b.zeros.iter().map(ball_text).collect();
                format!("blaschke(zeros=[{}], scale={})", zs.join(", "), ball_text(&b.scale))
            }
            CircleMap::PerturbedDoubling(p) => format!("perturbed_doubling(b={})", p.b),
            CircleMap::Power(d) => format!("power(degree={d})"),
            CircleMap::General(g) => format!("general({})", g.describe()),
        }
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(Sha256::digest(self.describe().as_bytes()))
    }

    fn domain_method(&self) -> &'static str {
        match self {
            CircleMap::Blaschke(_) => "blaschke: zeros in the open unit disk, poles outside the closed disk",
            CircleMap::PerturbedDoubling(_) => "perturbed doubling: holomorphic and zero-free on C minus 0",
            CircleMap::Power(_) => "power map: holomorphic and zero-free on C minus 0",
            CircleMap::General(_) => "general: user-declared domain check",
        }
    }
}

fn ball_text(b: &BallScalar) -> String {
    format!("{:e}{:+e}i~{:e}", b.mid.re, b.mid.im, b.rad)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusCertificate {
    pub eta: f64,
    pub rho: f64,
    pub alpha: Option<f64>,
    /// Certified lower bound of `|T|` on `|z| = e^{2 pi eta}`.
    pub outer_image_lower: f64,
    /// Certified upper bound of `|T|` on `|z| = e^{-2 pi eta}`.
    pub inner_image_upper: f64,
    /// Number of arcs used on each circle after adaptive refinement.
    pub outer_arcs: usize,
    pub inner_arcs: usize,
    pub initial_subdivisions: usize,
    pub domain_check: String,
    pub map_hash: String,
}

impl AnnulusCertificate {
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, MapError> {
        if !(self.eta < alpha && alpha < self.rho) {
            return Err(MapError::AlphaOutOfRange { eta: self.eta, alpha, rho: self.rho });
        }
        self.alpha = Some(alpha);
        Ok(self)
    }

    pub fn alpha(&self) -> Result<f64, MapError> {
        self.alpha.ok_or(MapError::AlphaMissing)
    }
}

/// Default limit on the number of arcs per circle during refinement.
pub const DEFAULT_ARC_CAP: usize = 1 << 26;

/// Ball covering the arc `[2 pi j / m, 2 pi (j + 1) / m]` of the circle
/// `|z| = e^{log_radius}`; `log_radius` is itself a ball so the exact
/// radius is always enclosed.
pub fn arc_ball(log_radius: BallScalar, j: usize, m: usize) -> Result<BallScalar, BallError> {
    let radius = log_radius.exp()?;
    let theta = BallScalar::pi().scale(2.0) * BallScalar::ratio(2 * j as i64 + 1, 2 * m as i64);
    let on_circle = radius * (BallScalar::exact(Complex64::new(0.0, 1.0)) * theta).exp()?;
    // Every arc point is within R * (half angle) = R pi / m of the midpoint.
    let half = round::div_up(round::mul_up(radius.abs_upper(), std::f64::consts::PI.next_up()), m as f64);
    on_circle.inflate(half).finite()
}

/// `2 pi w` as a ball.
pub fn log_radius(w: f64) -> BallScalar {
    BallScalar::pi().scale(2.0) * BallScalar::real(w)
}

#[derive(Clone, Copy)]
struct Arc0 {
    level: u32,
    index: usize,
}

/// Covers the circle `|z| = e^{2 pi w}` (`w` may be negative) adaptively and
/// checks `accept` on every image ball. Returns the accepted image balls.
/// An image for which `hopeless` holds proves the check false on that arc,
/// so refinement stops there.
fn cover_circle(
    map: &CircleMap,
    w: f64,
    m: usize,
    cap: usize,
    accept: &(dyn Fn(&BallScalar) -> bool + Sync),
    hopeless: &(dyn Fn(&BallScalar) -> bool + Sync),
) -> Result<Vec<BallScalar>, (usize, BallScalar)> {
    let lr = log_radius(w);
    let mut pending: Vec<Arc0> = (0..m).map(|index| Arc0 { level: 0, index }).collect();
    let mut accepted = Vec::new();
    while !pending.is_empty() {
        let results: Vec<(Arc0, Option<BallScalar>)> = pending
            .par_iter()
            .map(|a| {
                let parts = m << a.level;
                let img = arc_ball(lr, a.index, parts).ok().and_then(|z| map.eval(z).ok());
                (*a, img)
            })
            .collect();
        let mut next = Vec::new();
        for (a, img) in results {
            match img {
                Some(im) if accept(&im) => accepted.push(im),
                Some(im) if hopeless(&im) => return Err((a.index, im)),
                other => {
                    let parts = m << (a.level + 1);
                    if parts > cap {
                        let image = other.unwrap_or(BallScalar { mid: Complex64::new(f64::NAN, f64::NAN), rad: f64::INFINITY });
                        return Err((a.index, image));
                    }
                    next.push(Arc0 { level: a.level + 1, index: 2 * a.index });
                    next.push(Arc0 { level: a.level + 1, index: 2 * a.index + 1 });
                }
            }
        }
        pending = next;
    }
    Ok(accepted)
}

/// Certifies the expansion annulus for widths `0 < eta < rho`.
pub fn certify_annulus(map: &CircleMap, eta: f64, rho: f64, subdivisions: usize) -> Result<AnnulusCertificate, MapError> {
    certify_annulus_with_cap(map, eta, rho, subdivisions, DEFAULT_ARC_CAP)
}

pub fn certify_annulus_with_cap(
    map: &CircleMap,
    eta: f64,
    rho: f64,
    subdivisions: usize,
    cap: usize,
) -> Result<AnnulusCertificate, MapError> {
    if !(eta > 0.0 && eta < rho && rho.is_finite()) {
        return Err(MapError::BadWidths { eta, rho });
    }
    if subdivisions < 8 {
        return Err(MapError::InvalidSpec(format!("need at least 8 subdivisions, got {subdivisions}")));
    }
    if !map.domain_ok(eta) {
        return Err(MapError::Domain(format!("domain check failed for eta = {eta}")));
    }
    let big = log_radius(rho).exp()?.abs_upper();
    let small = log_radius(-rho).exp()?.abs_lower();
    if !(small > 0.0) {
        return Err(MapError::BadWidths { eta, rho });
    }
    let outer = cover_circle(map, eta, subdivisions, cap, &|im: &BallScalar| im.abs_lower() > big, &|im: &BallScalar| im.abs_upper() <= big)
        .map_err(|(arc, image)| MapError::CertificationFailed { arc, side: Side::Outer, image })?;
    let inner = cover_circle(map, -eta, subdivisions, cap, &|im: &BallScalar| im.abs_upper() < small, &|im: &BallScalar| im.abs_lower() >= small)
        .map_err(|(arc, image)| MapError::CertificationFailed { arc, side: Side::Inner, image })?;
    let outer_image_lower = outer.iter().map(|b| b.abs_lower()).fold(f64::INFINITY, f64::min);
    let inner_image_upper = inner.iter().map(|b| b.abs_upper()).fold(0.0, f64::max);
    Ok(AnnulusCertificate {
        eta,
        rho,
        alpha: None,
        outer_image_lower,
        inner_image_upper,
        outer_arcs: outer.len(),
        inner_arcs: inner.len(),
        initial_subdivisions: subdivisions,
        domain_check: map.domain_method().to_string(),
        map_hash: map.hash_hex(),
    })
}

/// Certified `(inf |T|, sup |T|)` on the circle `|z| = e^{2 pi w}` from a
/// fixed cover by `m` arcs.
pub fn circle_modulus_range(map: &CircleMap, w: f64, m: usize) -> Result<(f64, f64), MapError> {
    let lr = log_radius(w);
    let images: Vec<BallScalar> = (0..m)
        .into_par_iter()
        .map(|j| map.eval(arc_ball(lr, j, m)?))
        .collect::<Result<_, _>>()?;
    let lo = images.iter().map(|b| b.abs_lower()).fold(f64::INFINITY, f64::min);
    let hi = images.iter().map(|b| b.abs_upper()).fold(0.0, f64::max);
    Ok((lo, hi))
}

/// Nonrigorous estimate of the best `rho` for a given `eta`, from sampled
/// moduli on the two circles. Used only to propose parameters.
pub fn suggest_rho(map: &CircleMap, eta: f64, samples: usize) -> Option<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut best = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let r = (sign * two_pi * eta).exp();
        for j in 0..samples {
            let t = two_pi * j as f64 / samples as f64;
            let z = BallScalar::exact(Complex64::from_polar(r, t));
            let v = map.eval(z).ok()?.mid.norm();
            best = best.min(sign * v.ln() / two_pi);
        }
    }
    best.is_finite().then_some(best)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactSpectrum {
    pub fixed_point: BallScalar,
    pub multiplier: BallScalar,
    pub method: String,
    pub eigenvalues: Vec<BallScalar>,
}

/// Eigenvalues `{1} U {mu^n, conj(mu)^n : 1 <= n <= n_max}` of the transfer
/// operator of an expanding Blaschke product with attracting fixed point
/// `z0` in the unit disk, `mu = T'(z0)`.
pub fn blaschke_exact_spectrum(b: &Blaschke, n_max: usize) -> Result<ExactSpectrum, MapError> {
    if !b.expansion_check() {
        return Err(MapError::FixedPoint("map is not certified expanding".into()));
    }
    let map = CircleMap::Blaschke(b.clone());
    let origin_zeros = b.zeros().iter().filter(|a| **a == BallScalar::ZERO).count();
    let (fixed_point, method) = if origin_zeros > 0 {
        (BallScalar::ZERO, "exact: T has a zero at the origin".to_string())
    } else {
        certify_fixed_point(&map)?
    };
    // a double zero at the origin makes T'(0) vanish identically
    let mu = if origin_zeros > 1 { BallScalar::ZERO } else { map.deriv(fixed_point)? };
    let mut eigenvalues = vec![BallScalar::ONE];
    if mu.mid == Complex64::new(0.0, 0.0) && mu.rad == 0.0 {
        eigenvalues.push(BallScalar::ZERO);
    } else {
        let real = mu.mid.im == 0.0;
        let mut p = BallScalar::ONE;
        for _ in 0..n_max {
            p = p * mu;
            eigenvalues.push(p.finite()?);
            if !real {
                eigenvalues.push(p.conj());
            }
        }
    }
    Ok(ExactSpectrum { fixed_point, multiplier: mu, method, eigenvalues })
}

/// Newton iteration for `T(z) = z` from the origin, then a Krawczyk
/// containment test on a small disk around the iterate.
fn certify_fixed_point(map: &CircleMap) -> Result<(BallScalar, String), MapError> {
    let mut x = Complex64::new(0.0, 0.0);
    let one = BallScalar::ONE;
    for _ in 0..60 {
        let xb = BallScalar::exact(x);
        let g = map.eval(xb)? - xb;
        if g.mid == Complex64::new(0.0, 0.0) && g.rad == 0.0 {
            return Ok((xb, "exact: T(z0) - z0 evaluates to an exact zero ball".into()));
        }
        let dg = map.deriv(xb)? - one;
        let step = g.mid / dg.mid;
        x -= step;
        if !(x.re.is_finite() && x.im.is_finite()) || x.norm() >= 1.0 {
            return Err(MapError::FixedPoint("Newton iteration left the unit disk".into()));
        }
        if step.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    let xb = BallScalar::exact(x);
    let g = map.eval(xb)? - xb;
    if g.mid == Complex64::new(0.0, 0.0) && g.rad == 0.0 {
        return Ok((xb, "exact: T(z0) - z0 evaluates to an exact zero ball".into()));
    }
    let y = BallScalar::exact(Complex64::new(1.0, 0.0) / (map.deriv(xb)?.mid - 1.0));
    let mut r = (g.abs_upper() * 1e3).max(1e-14);
    while r < 0.5 {
        let disk = BallScalar { mid: x, rad: r };
        if disk.abs_upper() < 1.0 {
            let slope = one - y * (map.deriv(disk)? - one);
            let k = xb - y * g + slope * BallScalar { mid: Complex64::new(0.0, 0.0), rad: r };
            let dist = round::add_up(round::hypot_up(k.mid.re - x.re, k.mid.im - x.im), k.rad);
            if dist < r {
                return Ok((disk, format!("krawczyk: K(X) inside X for radius {r:e}")));
            }
        }
        r *= 4.0;
    }
    Err(MapError::FixedPoint("Krawczyk test did not succeed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benchmark_mu() -> BallScalar {
        let r = BallScalar::real(2.0).sqrt_real().unwrap() * BallScalar::ratio(3, 8);
        let phase = (BallScalar::exact(Complex64::new(0.0, 1.0)) * BallScalar::pi() * BallScalar::ratio(1, 8))
            .exp()
            .unwrap();
        r * phase
    }

    fn benchmark_blaschke() -> Blaschke {
        Blaschke::two_factor(benchmark_mu()).unwrap()
    }

    #[test]
    fn expansion_check_examples() {
        let doubling = Blaschke::new(vec![BallScalar::ZERO; 2], BallScalar::ONE).unwrap();
        assert!(doubling.expansion_check());
        assert!(benchmark_blaschke().expansion_check());
        let slow = Blaschke::new(vec![BallScalar::real(0.9); 2], BallScalar::ONE).unwrap();
        assert!(!slow.expansion_check());
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(Blaschke::new(vec![BallScalar::real(1.0)], BallScalar::ONE).is_err());
        assert!(Blaschke::new(vec![BallScalar::ZERO], BallScalar::real(2.0)).is_err());
        assert!(PerturbedDoubling::new(Ratio::new(1, 3)).is_err());
    }

    #[test]
    fn doubling_annulus() {
        let cert = certify_annulus(&CircleMap::doubling(), 0.1, 0.19, 64).unwrap();
        assert!(cert.outer_image_lower > (2.0 * std::f64::consts::PI * 0.19).exp());
        assert!(cert.clone().with_alpha(0.15).is_ok());
        assert!(cert.with_alpha(0.2).is_err());
        assert!(certify_annulus(&CircleMap::doubling(), 0.1, 0.21, 64).is_err());
    }

    #[test]
    fn blaschke_benchmark_annulus() {
        let map = CircleMap::Blaschke(benchmark_blaschke());
        let cert = certify_annulus(&map, 0.49149149, 0.583052, 256).unwrap();
        assert!(cert.with_alpha(0.5758488557738615).is_ok());
    }

    #[test]
    fn perturbed_doubling_benchmark_annulus() {
        let b = Ratio::new(5, 64) + Ratio::new(1, 128) + Ratio::new(1, 256);
        let map = CircleMap::PerturbedDoubling(PerturbedDoubling::new(b).unwrap());
        certify_annulus(&map, 0.22211055, 0.312891, 256).unwrap();
    }

    #[test]
    fn exact_spectrum_of_the_benchmark_blaschke_product() {
        let spectrum = blaschke_exact_spectrum(&benchmark_blaschke(), 4).unwrap();
        assert_eq!(spectrum.fixed_point, BallScalar::ZERO);
        let mu = spectrum.multiplier;
        // (3 sqrt2 / 8) e^{i pi/8}, from a 30-digit evaluation
        assert!(mu.contains(Complex64::new(0.4899611118286412, 0.2029485375548239)), "{mu:?}");
        assert!(mu.rad < 1e-14);
        let mu2 = spectrum.eigenvalues[3];
        assert!((mu2.abs_upper() - 9.0 / 32.0).abs() < 1e-14);
        assert!(mu2.abs_upper() < 0.51);
        assert_eq!(spectrum.eigenvalues.len(), 1 + 2 * 4);
    }

    #[test]
    fn exact_spectrum_of_doubling() {
        let b = Blaschke::new(vec![BallScalar::ZERO; 2], BallScalar::ONE).unwrap();
        let spectrum = blaschke_exact_spectrum(&b, 10).unwrap();
        assert_eq!(spectrum.eigenvalues, vec![BallScalar::ONE, BallScalar::ZERO]);
    }

    #[test]
    fn krawczyk_finds_nonzero_fixed_point() {
        // Zeros away from the origin: T(0) != 0, so the Krawczyk branch runs.
        let b = Blaschke::new(vec![BallScalar::real(0.2), BallScalar::real(-0.1)], BallScalar::ONE).unwrap();
        let spectrum = blaschke_exact_spectrum(&b, 2).unwrap();
        assert!(spectrum.method.starts_with("krawczyk"));
        let map = CircleMap::Blaschke(b);
        let z = spectrum.fixed_point;
        let g = map.eval(BallScalar::exact(z.mid)).unwrap() - BallScalar::exact(z.mid);
        assert!(g.abs_upper() < 1e-12);
    }
}
