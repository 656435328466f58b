//! Uniform resolvent bounds on circles by adaptive arc subdivision, and
//! assembly of the exclosure argument.
//!
//! An arc is certified from one SVD at an anchor `z~` near its midpoint. If
//! every point of the arc is within `h` of `z~` and `sigma_min(z~ - T) >= s`
//! with `h <= s/2`, the first resolvent identity gives
//! `||(z - T)^{-1}|| <= 1 / (s - h) <= 2 / s` on the whole arc.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::{round, BallError, BallMatrix, BallScalar};
use crate::schur::{gate_delta, transfer_bound, CertifiedSchur, SchurError};
use crate::svd::{certify_svd, SvdError};

#[derive(Debug, thiserror::Error)]
pub enum ContourError {
    #[error(transparent)]
    Ball(#[from] BallError),
    #[error(transparent)]
    Schur(#[from] SchurError),
    #[error("arc budget of {0} evaluations exceeded")]
    BudgetExceeded(usize),
    #[error("arc at angle {angle} could not be certified (spectrum too close to the circle)")]
    UncertifiableArc { angle: f64 },
    #[error("resolvent norm at {anchor} is at least {lower:e}, above the target {target:e}")]
    TargetUnreachable { anchor: Complex64, lower: f64, target: f64 },
    #[error("disks {0} and {1} are not disjoint")]
    DisksOverlap(usize, usize),
    #[error("diagonal entry {0} of T is not strictly inside any disk")]
    DiagonalOutsideAllDisks(usize),
    #[error("transferred bound on disk {disk} is {bound:e}, above 1/delta = {limit:e}")]
    BoundExceedsBudget { disk: usize, bound: f64, limit: f64 },
    #[error("diagonal entry {0} is within rounding distance of the disk boundary")]
    AmbiguousMultiplicity(usize),
    #[error("{disks} disks but {contours} contour certificates")]
    CountMismatch { disks: usize, contours: usize },
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Result<Self, ContourError> {
        if !(radius > 0.0 && radius.is_finite() && center.re.is_finite() && center.im.is_finite()) {
            return Err(ContourError::Domain(format!("bad disk ({center}, {radius})")));
        }
        Ok(Self { center, radius })
    }

    /// Upper bound on `|z|` over the closed disk.
    pub fn modulus_upper(&self) -> f64 {
        round::add_up(round::hypot_up(self.center.re, self.center.im), self.radius)
    }

    fn distance_bounds(&self, z: Complex64) -> (f64, f64) {
        let dr = z.re - self.center.re;
        let di = z.im - self.center.im;
        // each difference is within half an ulp of the exact one
        let hi = round::hypot_up(round::up(dr.abs()), round::up(di.abs()));
        let lo = round::hypot_down(round::down(dr.abs()).max(0.0), round::down(di.abs()).max(0.0));
        (lo, hi)
    }

    /// `z` certainly in the open disk.
    pub fn strictly_contains(&self, z: Complex64) -> bool {
        self.distance_bounds(z).1 < self.radius
    }

    /// `z` certainly outside the closed disk.
    pub fn strictly_excludes(&self, z: Complex64) -> bool {
        self.distance_bounds(z).0 > self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcCertificate {
    pub anchor: Complex64,
    /// Angular interval `[start, end]` in radians, as multiples of the full turn
    /// `[index / parts, (index + 1) / parts]`.
    pub index: u64,
    pub parts: u64,
    /// Upper bound on the distance from the anchor to any point of the arc.
    pub coverage_radius: f64,
    pub sigma_min_lower: f64,
    pub local_bound: f64,
}

impl ArcCertificate {
    pub fn angles(&self) -> (f64, f64) {
        let tau = 2.0 * std::f64::consts::PI;
        (tau * self.index as f64 / self.parts as f64, tau * (self.index + 1) as f64 / self.parts as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourCertificate {
    pub disk: Disk,
    pub sup_bound: f64,
    pub arcs: Vec<ArcCertificate>,
    pub svd_calls: usize,
    pub cache_hits: usize,
}

impl ContourCertificate {
    /// Checks that the arcs tile the full turn: sorted by position, each arc
    /// starts exactly where the previous one ends (closed arcs share endpoints).
    pub fn covers_circle(&self) -> bool {
        let lcm = self.arcs.iter().map(|a| a.parts).max().unwrap_or(0);
        if lcm == 0 {
            return false;
        }
        let mut spans: Vec<(u64, u64)> = self
            .arcs
            .iter()
            .map(|a| {
                let s = lcm / a.parts;
                (a.index * s, (a.index + 1) * s)
            })
            .collect();
        spans.sort_unstable();
        let mut pos = 0;
        for (a, b) in spans {
            if a != pos {
                return false;
            }
            pos = b;
        }
        pos == lcm
    }
}

#[derive(Clone, Debug)]
pub struct CircleOptions {
    pub initial_arcs: usize,
    pub max_arcs: usize,
    /// Arcs narrower than `2^-min_angle_exp` of a full turn are not split further.
    pub min_angle_exp: u32,
}

impl Default for CircleOptions {
    fn default() -> Self {
        Self { initial_arcs: 16, max_arcs: 1_000_000, min_angle_exp: 40 }
    }
}

/// SVD results keyed by matrix hash and anchor bits.
#[derive(Default)]
pub struct SvdCache {
    entries: Mutex<HashMap<(String, u64, u64), (f64, f64)>>,
}

impl SvdCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &(String, u64, u64)) -> Option<(f64, f64)> {
        self.entries.lock().expect("cache lock").get(key).copied()
    }

    fn put(&self, key: (String, u64, u64), v: (f64, f64)) {
        self.entries.lock().expect("cache lock").insert(key, v);
    }
}

struct Eval {
    anchor: Complex64,
    coverage: f64,
    sigma_lower: f64,
    sigma_upper: f64,
    cached: bool,
}

fn evaluate_arc(
    t: &BallMatrix,
    hash: &str,
    disk: &Disk,
    index: u64,
    parts: u64,
    cache: Option<&SvdCache>,
) -> Result<Eval, ContourError> {
    let two_pi_i = BallScalar::exact(Complex64::new(0.0, 2.0)) * BallScalar::pi();
    let theta = two_pi_i * BallScalar::ratio(2 * index as i64 + 1, 2 * parts as i64);
    let mid = BallScalar::exact(disk.center) + BallScalar::real(disk.radius) * theta.exp()?;
    let anchor = mid.mid;
    // Arc points lie within radius * (half angle) of the exact midpoint.
    let half = round::div_up(round::mul_up(disk.radius, std::f64::consts::PI.next_up()), parts as f64);
    let coverage = round::add_up(half, mid.rad);
    let key = (hash.to_string(), anchor.re.to_bits(), anchor.im.to_bits());
    if let Some((lo, hi)) = cache.and_then(|c| c.get(&key)) {
        return Ok(Eval { anchor, coverage, sigma_lower: lo, sigma_upper: hi, cached: true });
    }
    let shifted = t.shifted_negation(BallScalar::exact(anchor))?;
    let (lo, hi) = match certify_svd(&shifted) {
        Ok(c) => (c.theta, c.sigma_min_upper),
        Err(SvdError::OrthogonalityTooWeak { .. }) | Err(SvdError::NoConvergence) => (0.0, f64::INFINITY),
        Err(SvdError::Ball(e)) => return Err(e.into()),
        Err(e) => return Err(ContourError::Domain(e.to_string())),
    };
    if let Some(c) = cache {
        c.put(key, (lo, hi));
    }
    Ok(Eval { anchor, coverage, sigma_lower: lo, sigma_upper: hi, cached: false })
}

/// Certifies `sup ||(z - T')^{-1}|| <= target` over the circle bounding `disk`
/// for every member `T'` of `t`. Arc lines are written to `log` in a
/// deterministic order.
pub fn certify_circle(
    t: &BallMatrix,
    disk: Disk,
    target: f64,
    opts: &CircleOptions,
    cache: Option<&SvdCache>,
    mut log: Option<&mut dyn Write>,
) -> Result<ContourCertificate, ContourError> {
    if !(target > 0.0) {
        return Err(ContourError::Domain("target must be positive".into()));
    }
    let hash = t.hash_hex();
    let m0 = opts.initial_arcs.max(1) as u64;
    let mut pending: Vec<(u64, u64)> = (0..m0).map(|i| (i, m0)).collect();
    let mut arcs = Vec::new();
    let mut svd_calls = 0;
    let mut cache_hits = 0;
    let mut evaluated = 0usize;
    while !pending.is_empty() {
        evaluated += pending.len();
        if evaluated > opts.max_arcs {
            return Err(ContourError::BudgetExceeded(opts.max_arcs));
        }
        let evals: Vec<Result<Eval, ContourError>> = pending
            .par_iter()
            .map(|&(index, parts)| evaluate_arc(t, &hash, &disk, index, parts, cache))
            .collect();
        let mut next = Vec::new();
        for (&(index, parts), ev) in pending.iter().zip(evals) {
            let ev = ev?;
            if ev.cached {
                cache_hits += 1;
            } else {
                svd_calls += 1;
            }
            // The resolvent at the anchor itself is at least 1/sigma_upper.
            let at_anchor = round::div_down(1.0, ev.sigma_upper);
            if at_anchor > target {
                if let Some(w) = log.as_deref_mut() {
                    writeln!(w, "arc {index}/{parts} anchor {} sigma<= {:e} unreachable", ev.anchor, ev.sigma_upper)?;
                }
                return Err(ContourError::TargetUnreachable { anchor: ev.anchor, lower: at_anchor, target });
            }
            let slack = round::sub_down(ev.sigma_lower, ev.coverage);
            let covered = ev.sigma_lower > 0.0 && ev.coverage <= ev.sigma_lower / 2.0;
            let local = if covered { round::div_up(1.0, slack) } else { f64::INFINITY };
            let accept = covered && local <= target;
            if let Some(w) = log.as_deref_mut() {
                let verdict = if accept { "accept" } else { "split" };
                writeln!(w, "arc {index}/{parts} anchor {} sigma>= {:e} bound {:e} {verdict}", ev.anchor, ev.sigma_lower, local)?;
            }
            if accept {
                arcs.push(ArcCertificate {
                    anchor: ev.anchor,
                    index,
                    parts,
                    coverage_radius: ev.coverage,
                    sigma_min_lower: ev.sigma_lower,
                    local_bound: local,
                });
            } else {
                if parts.trailing_zeros() >= opts.min_angle_exp || parts >= (1u64 << opts.min_angle_exp) {
                    let tau = 2.0 * std::f64::consts::PI;
                    return Err(ContourError::UncertifiableArc { angle: tau * (index as f64 + 0.5) / parts as f64 });
                }
                next.push((2 * index, 2 * parts));
                next.push((2 * index + 1, 2 * parts));
            }
        }
        pending = next;
    }
    arcs.sort_by(|a, b| {
        let (sa, sb) = (a.index as f64 / a.parts as f64, b.index as f64 / b.parts as f64);
        sa.total_cmp(&sb)
    });
    let sup_bound = arcs.iter().map(|a| a.local_bound).fold(0.0, f64::max);
    Ok(ContourCertificate { disk, sup_bound, arcs, svd_calls, cache_hits })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclosureCertificate {
    /// Bounds on `||(z - M')^{-1}||` on each circle, after transfer from `T`.
    pub transferred_sups: Vec<f64>,
    /// `1 / max_i sup_i` over the triangular factor, rounded down.
    pub delta0: f64,
    /// Pseudospectral radius guaranteed by the gate.
    pub usable_delta: f64,
    pub delta: f64,
}

/// Checks disjointness, containment of `diag(T)` in the disks, the
/// transferred boundary bounds against `1/delta`, and the pseudospectrum
/// gate; on success `sigma_delta(M') is contained in the union of the disks`
/// for every member `M'` of the certified matrix.
pub fn exclosure(
    schur: &CertifiedSchur,
    disks: &[Disk],
    delta: f64,
    contours: &[ContourCertificate],
) -> Result<ExclosureCertificate, ContourError> {
    if disks.len() != contours.len() {
        return Err(ContourError::CountMismatch { disks: disks.len(), contours: contours.len() });
    }
    if !(delta > 0.0) {
        return Err(ContourError::Domain("delta must be positive".into()));
    }
    check_disjoint(disks)?;
    for i in 0..schur.dim() {
        let z = schur.t[(i, i)];
        if !disks.iter().any(|d| d.strictly_contains(z)) {
            return Err(ContourError::DiagonalOutsideAllDisks(i));
        }
    }
    let limit = round::div_down(1.0, delta);
    let mut transferred = Vec::with_capacity(disks.len());
    let mut worst_t = 0.0f64;
    for (i, (d, c)) in disks.iter().zip(contours).enumerate() {
        if c.disk != *d || !c.covers_circle() {
            return Err(ContourError::Domain(format!("contour certificate {i} does not match its disk")));
        }
        let bound = transfer_bound(schur.epsilon, Complex64::new(d.modulus_upper(), 0.0), c.sup_bound)?;
        if !(bound <= limit) {
            return Err(ContourError::BoundExceedsBudget { disk: i, bound, limit });
        }
        transferred.push(bound);
        worst_t = worst_t.max(c.sup_bound);
    }
    let delta0 = round::div_down(1.0, worst_t);
    let usable_delta = gate_delta(schur.epsilon, schur.c0, delta0)?;
    if !(usable_delta >= delta) {
        return Err(ContourError::BoundExceedsBudget { disk: usize::MAX, bound: round::div_up(1.0, usable_delta), limit });
    }
    Ok(ExclosureCertificate { transferred_sups: transferred, delta0, usable_delta, delta })
}

pub fn check_disjoint(disks: &[Disk]) -> Result<(), ContourError> {
    for i in 0..disks.len() {
        for j in i + 1..disks.len() {
            let (a, b) = (disks[i], disks[j]);
            let gap = Disk { center: a.center, radius: round::add_up(a.radius, b.radius) };
            if !gap.strictly_excludes(b.center) {
                return Err(ContourError::DisksOverlap(i, j));
            }
        }
    }
    Ok(())
}

/// Number of diagonal entries of `T` strictly inside `disk`.
pub fn multiplicity_count(schur: &CertifiedSchur, disk: &Disk) -> Result<usize, ContourError> {
    let mut count = 0;
    for i in 0..schur.dim() {
        let z = schur.t[(i, i)];
        if disk.strictly_contains(z) {
            count += 1;
        } else if !disk.strictly_excludes(z) {
            return Err(ContourError::AmbiguousMultiplicity(i));
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schur::certify_schur;
    use faer::Mat;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_zero_on_unit_circle() {
        let t = BallMatrix::zeros(1, 1);
        let cert = certify_circle(&t, Disk::new(c(0.0, 0.0), 1.0).unwrap(), 10.0, &CircleOptions::default(), None, None)
            .unwrap();
        assert!(cert.sup_bound <= 2.0);
        assert!(cert.covers_circle());
    }

    #[test]
    fn unreachable_target_fails_fast() {
        let t = BallMatrix::zeros(1, 1);
        let err = certify_circle(&t, Disk::new(c(0.0, 0.0), 1.0).unwrap(), 0.5, &CircleOptions::default(), None, None)
            .unwrap_err();
        assert!(matches!(err, ContourError::TargetUnreachable { .. }));
    }

    #[test]
    fn cache_is_reused() {
        let t = BallMatrix::from_exact(Mat::from_fn(2, 2, |i, j| if i == j { c(i as f64 * 0.5, 0.0) } else { c(0.0, 0.0) }));
        let disk = Disk::new(c(1.0, 0.0), 0.1).unwrap();
        let cache = SvdCache::new();
        let a = certify_circle(&t, disk, 100.0, &CircleOptions::default(), Some(&cache), None).unwrap();
        let b = certify_circle(&t, disk, 100.0, &CircleOptions::default(), Some(&cache), None).unwrap();
        assert_eq!(a.arcs, b.arcs);
        assert_eq!(b.svd_calls, 0);
        assert!(b.cache_hits > 0);
    }

    #[test]
    fn scalar_exclosure() {
        let cs = certify_schur(&BallMatrix::zeros(1, 1)).unwrap();
        let disk = Disk::new(c(0.0, 0.0), 0.5).unwrap();
        let cont = certify_circle(&cs.t_ball(), disk, 10.0, &CircleOptions::default(), None, None).unwrap();
        let ex = exclosure(&cs, &[disk], 0.1, &[cont]).unwrap();
        assert!(ex.transferred_sups[0] <= 10.0);
        assert_eq!(multiplicity_count(&cs, &disk).unwrap(), 1);
        let far = Disk::new(c(3.0, 0.0), 0.5).unwrap();
        assert_eq!(multiplicity_count(&cs, &far).unwrap(), 0);
    }

    #[test]
    fn overlapping_disks_are_rejected() {
        let a = Disk::new(c(0.0, 0.0), 0.6).unwrap();
        let b = Disk::new(c(1.0, 0.0), 0.6).unwrap();
        assert!(matches!(check_disjoint(&[a, b]), Err(ContourError::DisksOverlap(0, 1))));
        let t = Mat::from_fn(2, 2, |i, j| if i == j { c(i as f64, 0.0) } else { c(0.0, 0.0) });
        let cs = certify_schur(&BallMatrix::from_exact(t)).unwrap();
        let dummy = ContourCertificate { disk: a, sup_bound: 1.0, arcs: vec![], svd_calls: 0, cache_hits: 0 };
        assert!(matches!(
            exclosure(&cs, &[a, b], 0.1, &[dummy.clone(), dummy]),
            Err(ContourError::DisksOverlap(0, 1))
        ));
    }
}
