//! Functional-analytic constants behind the enclosure theorem, evaluated
//! through ball arithmetic and reported as upper bounds (or lower bounds
//! where stated).
//!
//! Notation: `A_s` is the space of functions whose Fourier coefficients are
//! summable against `e^{2 pi s |k|}`; `eta < alpha < rho` are the widths of
//! an [`AnnulusCertificate`].

use serde::{Deserialize, Serialize};

use crate::ball::{round, BallError, BallScalar};
use crate::maps::{suggest_rho, AnnulusCertificate, CircleMap, MapError};

#[derive(Debug, thiserror::Error)]
pub enum BoundsError {
    #[error(transparent)]
    Ball(#[from] BallError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("delta budget is unusable (delta = {delta:e})")]
    BudgetUnusable { delta: f64 },
    #[error("no admissible n in 1..={n_max}")]
    NoAdmissibleN { n_max: u64 },
    #[error("denominator of the weak resolvent bound is not positive")]
    DenominatorNonpositive,
}

/// The three widths of an annulus certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Widths {
    pub eta: f64,
    pub alpha: f64,
    pub rho: f64,
}

impl Widths {
    pub fn new(eta: f64, alpha: f64, rho: f64) -> Result<Self, BoundsError> {
        if !(0.0 <= eta && eta < alpha && alpha < rho && rho.is_finite()) {
            return Err(BoundsError::Domain(format!("need 0 <= eta < alpha < rho, got {eta}, {alpha}, {rho}")));
        }
        Ok(Self { eta, alpha, rho })
    }

    pub fn from_certificate(ann: &AnnulusCertificate) -> Result<Self, BoundsError> {
        Self::new(ann.eta, ann.alpha()?, ann.rho)
    }
}

fn two_pi() -> BallScalar {
    BallScalar::pi().scale(2.0)
}

fn b(x: f64) -> BallScalar {
    BallScalar::real(x)
}

/// `e^{-2 pi t}` for a nonnegative ball `t`.
fn decay(t: BallScalar) -> Result<BallScalar, BoundsError> {
    Ok((-(two_pi() * t)).exp()?.real_part())
}

fn op_norm_ball(w: Widths) -> Result<BallScalar, BoundsError> {
    let gap = two_pi() * (b(w.rho) - b(w.alpha));
    let denom = gap.exp_m1_real()?;
    if !(denom.re_lower() > 0.0) {
        return Err(BoundsError::Domain("rho - alpha too small".into()));
    }
    Ok(BallScalar::ONE + b(2.0).div(denom)?)
}

/// `1 + 2 / (e^{2 pi (rho - alpha)} - 1)`, a bound for `||L_T||` from `A_eta` to `A_alpha`.
pub fn op_norm_bound(w: Widths) -> Result<f64, BoundsError> {
    Ok(op_norm_ball(w)?.re_upper())
}

/// `norm0^{(alpha - eta)/alpha} norm_alpha^{eta/alpha}`, bounding the `A_eta`
/// norm of a function with the given `A_0` and `A_alpha` norms.
pub fn interpolation_bound(norm0: f64, norm_alpha: f64, eta: f64, alpha: f64) -> Result<f64, BoundsError> {
    if !(0.0 <= eta && eta < alpha && norm0 >= 0.0 && norm_alpha >= 0.0) {
        return Err(BoundsError::Domain("need 0 <= eta < alpha and nonnegative norms".into()));
    }
    if eta == 0.0 {
        return Ok(norm0);
    }
    if norm0 == 0.0 || norm_alpha == 0.0 {
        return Ok(0.0);
    }
    let t = b(eta).div(b(alpha))?;
    let log = (BallScalar::ONE - t) * b(norm0).ln()? + t * b(norm_alpha).ln()?;
    Ok(log.real_part().exp()?.re_upper())
}

/// `e^{-2 pi K (alpha - eta)}`, bounding `||I - Pi_K||` from `A_alpha` to `A_eta`.
pub fn projection_defect(k: usize, alpha: f64, eta: f64) -> Result<f64, BoundsError> {
    if !(alpha > eta && eta >= 0.0) {
        return Err(BoundsError::Domain("need alpha > eta >= 0".into()));
    }
    if k == 0 {
        return Ok(1.0);
    }
    Ok(decay(b(k as f64) * (b(alpha) - b(eta)))?.re_upper())
}

/// `B (e^{-2 pi K alpha} + e^{-2 pi K (alpha - eta)})`, bounding
/// `||L_T - L_{T,K}||` from `A_alpha` to `A_0`.
pub fn discretization_error(w: Widths, k: usize) -> Result<f64, BoundsError> {
    let kk = b(k as f64);
    let sum = decay(kk * b(w.alpha))? + decay(kk * (b(w.alpha) - b(w.eta)))?;
    Ok((op_norm_ball(w)? * sum).re_upper())
}

/// `(B / r)^{alpha / (alpha - eta)}` for exclusion radius `r`.
pub fn eigenratio_r(w: Widths, exclusion_radius: f64) -> Result<f64, BoundsError> {
    if !(exclusion_radius > 0.0) {
        return Err(BoundsError::Domain("exclusion radius must be positive".into()));
    }
    let base = op_norm_ball(w)?.div(b(exclusion_radius))?;
    let exponent = b(w.alpha).div(b(w.alpha) - b(w.eta))?;
    Ok(base.powf_real(exponent)?.re_upper())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HouseholderBudget {
    pub exclusion_radius: Option<f64>,
    pub ratio_r: f64,
    pub discretization_error: f64,
    /// Upper bound for `ratio_r * discretization_error`.
    pub delta: f64,
    /// Lower bound for `1 / delta`.
    pub delta_inv: f64,
}

/// `delta = up(r Delta)`, `delta_inv = down(1 / delta)`.
pub fn delta_budget(ratio_r: f64, disc_err: f64) -> Result<HouseholderBudget, BoundsError> {
    if !(ratio_r > 0.0 && disc_err > 0.0 && ratio_r.is_finite() && disc_err.is_finite()) {
        return Err(BoundsError::Domain("ratio and discretization error must be positive".into()));
    }
    let delta = round::mul_up(ratio_r, disc_err);
    let delta_inv = round::div_down(1.0, delta);
    if !(delta > 0.0 && delta.is_finite() && delta_inv > 0.0 && delta_inv.is_finite()) {
        return Err(BoundsError::BudgetUnusable { delta });
    }
    Ok(HouseholderBudget { exclusion_radius: None, ratio_r, discretization_error: disc_err, delta, delta_inv })
}

/// Budget for an annulus and exclusion radius, using the certified `r`.
pub fn budget_for(w: Widths, k: usize, exclusion_radius: f64) -> Result<HouseholderBudget, BoundsError> {
    let r = eigenratio_r(w, exclusion_radius)?;
    let d = discretization_error(w, k)?;
    let mut out = delta_budget(r, d)?;
    out.exclusion_radius = Some(exclusion_radius);
    Ok(out)
}

/// Constants of a two-norm Lasota-Yorke inequality
/// `||A^n f||_s <= C1 beta^n ||f||_s + C2 M^n ||f||_w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DflyConstants {
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
    pub m: f64,
    pub weak_norm_cap: Option<f64>,
}

impl DflyConstants {
    pub fn new(c1: f64, c2: f64, beta: f64, m: f64) -> Result<Self, BoundsError> {
        if !(c1 >= 0.0 && c2 >= 0.0 && (c1 > 0.0 || c2 > 0.0) && beta >= 0.0 && beta < m && m.is_finite()) {
            return Err(BoundsError::Domain("need C1, C2 >= 0 not both zero and 0 <= beta < M".into()));
        }
        Ok(Self { c1, c2, beta, m, weak_norm_cap: None })
    }
}

pub const DFLY_DEFAULT_N_MAX: u64 = 1_000_000;

/// `min_n C2 M^n / (mu^n - C1 beta^n)` over `1 <= n <= n_max`, skipping
/// indices with nonpositive denominator. Any admissible `n` gives a valid
/// bound, so truncating the scan is safe.
pub fn dfly_gamma(c: &DflyConstants, mu: f64, n_max: u64) -> Result<f64, BoundsError> {
    if !(mu > c.beta && mu.is_finite()) {
        return Err(BoundsError::Domain(format!("need mu > beta, got mu = {mu}, beta = {}", c.beta)));
    }
    if c.c2 == 0.0 {
        return Ok(0.0);
    }
    let p = b(c.m).div(b(mu))?;
    if c.c1 == 0.0 {
        return Ok((b(c.c2) * p).re_upper());
    }
    let ln_p = p.ln()?;
    let q = b(c.beta).div(b(mu))?;
    let ln_q = if c.beta > 0.0 { Some(q.ln()?) } else { None };
    let mut best = f64::INFINITY;
    for n in 1..=n_max {
        let nb = b(n as f64);
        let growth = (nb * ln_p).real_part().exp()?;
        let shrink = match ln_q {
            Some(l) => b(c.c1) * (nb * l).real_part().exp()?,
            None => BallScalar::ZERO,
        };
        let den = BallScalar::ONE - shrink;
        if den.re_lower() > 0.0 {
            let term = (b(c.c2) * growth).div(den)?.re_upper();
            best = best.min(term);
        }
        // For M >= mu every later term is at least C2 (M/mu)^{n+1}.
        if p.re_lower() >= 1.0 && best.is_finite() {
            let floor = (b(c.c2) * growth * p).re_lower();
            if floor >= best {
                break;
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(BoundsError::NoAdmissibleN { n_max })
    }
}

/// A-priori bound on the weak-norm resolvent of a perturbed operator:
/// `C^q / (1 - Ch r Delta C^q) (1/(1 - mu) + Ch r)` with `q = |ln mu| / |ln beta|`,
/// `Ch = C1 + C2`, `r` the strong resolvent bound and `C` the cone ratio.
pub fn weak_resolvent_feasibility(
    c: &DflyConstants,
    mu: f64,
    strong_resolvent: f64,
    delta_n: f64,
    cone_ratio: f64,
) -> Result<f64, BoundsError> {
    if c.m != 1.0 {
        return Err(BoundsError::Domain("weak resolvent bound requires M = 1".into()));
    }
    if !(mu > c.beta && mu < 1.0 && cone_ratio >= 1.0 && strong_resolvent >= 0.0 && delta_n >= 0.0) {
        return Err(BoundsError::Domain("need beta < mu < 1, cone ratio >= 1, nonnegative r and Delta".into()));
    }
    let c_hat = b(c.c1) + b(c.c2);
    let cone_q = if c.beta == 0.0 {
        BallScalar::ONE
    } else {
        let q = b(mu).ln()?.div(b(c.beta).ln()?)?;
        b(cone_ratio).powf_real(q)?
    };
    let cr = c_hat * b(strong_resolvent);
    let den = BallScalar::ONE - cr * b(delta_n) * cone_q;
    if !(den.re_lower() > 0.0) {
        return Err(BoundsError::DenominatorNonpositive);
    }
    let tail = BallScalar::ONE.div(b(1.0) - b(mu))? + cr;
    Ok((cone_q.div(den)? * tail).re_upper())
}

/// Nonrigorous search for widths maximizing the delta budget at order `k`.
/// The result still has to go through [`crate::maps::certify_annulus`].
pub fn suggest_widths(map: &CircleMap, k: usize, exclusion_radius: f64, eta_max: f64) -> Option<Widths> {
    let steps = 120;
    let mut best: Option<(f64, Widths)> = None;
    for i in 1..=steps {
        let eta = eta_max * i as f64 / steps as f64;
        let Some(rho) = suggest_rho(map, eta, 2048) else { continue };
        let rho = rho * (1.0 - 1e-6);
        if rho <= eta {
            continue;
        }
        for a in 1..steps {
            let alpha = eta + (rho - eta) * a as f64 / steps as f64;
            let w = Widths { eta, alpha, rho };
            let two_pi = 2.0 * std::f64::consts::PI;
            let op = 1.0 + 2.0 / (two_pi * (rho - alpha)).exp_m1();
            let ln_r = alpha / (alpha - eta) * (op / exclusion_radius).ln();
            let disc = op * ((-two_pi * k as f64 * alpha).exp() + (-two_pi * k as f64 * (alpha - eta)).exp());
            let score = -(ln_r + disc.ln());
            if score.is_finite() && best.is_none_or(|(s, _)| score > s) {
                best = Some((score, w));
            }
        }
    }
    best.map(|(_, w)| w)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLASCHKE: Widths = Widths { eta: 0.49149149, alpha: 0.5758488557738615, rho: 0.583052 };
    const DOUBLING: Widths = Widths { eta: 0.22211055, alpha: 0.308389, rho: 0.312891 };

    #[test]
    fn op_norm_examples() {
        let w = Widths::new(0.0, 0.1, 0.1 + std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI)).unwrap();
        assert!((op_norm_bound(w).unwrap() - 3.0).abs() < 1e-12);
        let bl = op_norm_bound(BLASCHKE).unwrap();
        assert!((44.0..44.5).contains(&bl), "{bl}");
        let db = op_norm_bound(DOUBLING).unwrap();
        assert!((db - 70.71).abs() < 0.01, "{db}");
    }

    #[test]
    fn interpolation_examples() {
        assert_eq!(interpolation_bound(2.5, 7.0, 0.0, 0.3).unwrap(), 2.5);
        let c = interpolation_bound(4.0, 4.0, 0.1, 0.3).unwrap();
        assert!((4.0..4.0 * (1.0 + 1e-14)).contains(&c));
        let e = interpolation_bound(1.0, std::f64::consts::E, 0.15, 0.3).unwrap();
        assert!(e >= std::f64::consts::E.sqrt() && e < std::f64::consts::E.sqrt() + 1e-14);
    }

    #[test]
    fn projection_and_discretization_examples() {
        assert_eq!(projection_defect(0, 0.5, 0.1).unwrap(), 1.0);
        let p = projection_defect(128, BLASCHKE.alpha, BLASCHKE.eta).unwrap();
        assert!((p / 3.4e-30 - 1.0).abs() < 0.05, "{p:e}");
        let p = projection_defect(128, DOUBLING.alpha, DOUBLING.eta).unwrap();
        assert!((p / 7.3e-31 - 1.0).abs() < 0.05, "{p:e}");
        let d = discretization_error(BLASCHKE, 128).unwrap();
        assert!(d < 2e-28 && d > 1.4e-28, "{d:e}");
        assert!(discretization_error(BLASCHKE, 256).unwrap() < d);
        let d = discretization_error(DOUBLING, 128).unwrap();
        assert!((d / 5.2e-29 - 1.0).abs() < 0.05, "{d:e}");
    }

    #[test]
    fn eigenratio_examples() {
        let r = eigenratio_r(BLASCHKE, 0.51).unwrap();
        assert!(r <= 2.21e14 && r > 1e13, "{r:e}");
        let r = eigenratio_r(DOUBLING, 0.21).unwrap();
        assert!(r <= 1.783e9 && r > 1e9, "{r:e}");
        let w = Widths::new(0.0, 0.1, 0.1 + std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI)).unwrap();
        let one = eigenratio_r(w, op_norm_bound(w).unwrap()).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_examples() {
        let unit = delta_budget(1.0, 1.0).unwrap();
        assert!(unit.delta >= 1.0 && unit.delta_inv <= 1.0);
        let bl = delta_budget(2.21e14, discretization_error(BLASCHKE, 128).unwrap()).unwrap();
        assert!(bl.delta_inv >= 0.97 * 2.99e13, "{:e}", bl.delta_inv);
        let db = delta_budget(1.783e9, discretization_error(DOUBLING, 128).unwrap()).unwrap();
        assert!(db.delta_inv >= 0.97 * 1.04e19, "{:e}", db.delta_inv);
        assert!(db.delta * db.delta_inv <= 1.0);
        assert!(delta_budget(1e300, 1e300).is_err());
    }

    #[test]
    fn dfly_examples() {
        let c = DflyConstants::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let g = dfly_gamma(&c, 0.5, 10).unwrap();
        assert!((2.0..2.0 + 1e-14).contains(&g));
        let c = DflyConstants::new(1.0, 1.0, 0.5, 1.0).unwrap();
        assert!(dfly_gamma(&c, 0.4, 10).is_err());
    }

    #[test]
    fn weak_resolvent_examples() {
        let c = DflyConstants::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let zero = weak_resolvent_feasibility(&c, 0.7, 10.0, 0.0, 100.0).unwrap();
        let q = 0.7f64.ln() / 0.5f64.ln();
        let want = 100f64.powf(q) * (1.0 / 0.3 + 20.0);
        assert!(zero >= want && zero < want * (1.0 + 1e-12));
        assert!(matches!(
            weak_resolvent_feasibility(&c, 0.7, 10.0, 1.0, 100.0),
            Err(BoundsError::DenominatorNonpositive)
        ));
    }
}
