//! Rigorous Fourier matrix of the truncated transfer operator.
//!
//! With `e_j(z) = z^j` on the unit circle, the transfer operator of an
//! expanding map `T` satisfies
//!
//! ```text
//! c_k(L e_j) = (1 / 2 pi) int e^{i j t} T(e^{i t})^{-k} dt = c_{-j}(T^{-k})
//! ```
//!
//! so row `k` of the matrix holds Fourier coefficients of `T^{-k}` read at
//! negated indices. Each row is one validated FFT of `N` ball samples of
//! `T^{-k}`; the aliased tail `sum_{l != 0} c_{n + l N}` is bounded from
//! the sup of `|T^{-k}|` on two circles `|z| = e^{+-2 pi w}` where `T` has
//! neither zeros nor poles.

use std::io::{BufReader, BufWriter};
use std::path::Path;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;


use crate::ball::{dump, round, BallError, BallMatrix, BallScalar};
use crate::fft::{FftError, FftPlan};
use crate::maps::{circle_modulus_range, log_radius, AnnulusCertificate, CircleMap, MapError};

#[derive(Debug, thiserror::Error)]
pub enum GalerkinError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Ball(#[from] BallError),
    #[error(transparent)]
    Fft(#[from] FftError),
    #[error("fft size {fft_size} must be a power of two >= 4(2K+1) = {min}")]
    FftSize { fft_size: usize, min: usize },
    #[error("aliasing bound {bound:e} exceeds tolerance {tolerance:e}; increase fft_size")]
    AliasingTooLarge { bound: f64, tolerance: f64 },
    #[error("entry (k={k}, j={j}) violates the analytic decay envelope")]
    DecayViolation { k: i64, j: i64 },
    #[error("annulus certificate does not match the map")]
    AnnulusMismatch,
    #[error("malformed Galerkin archive: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Aliasing bounds above this value are refused.
pub const DEFAULT_ALIAS_TOLERANCE: f64 = 1e-10;

/// Arcs used for the certified modulus ranges feeding the aliasing bound.
const MODULUS_ARCS: usize = 4096;

#[derive(Clone, Debug)]
pub struct GalerkinOperator {
    pub k: usize,
    pub n: usize,
    pub fft_size: usize,
    pub matrix: BallMatrix,
    /// Per-row bound on the aliasing error added to every entry of the row
    /// (rows ordered `k = -K..=K`).
    pub aliasing_bound: Vec<f64>,
    /// Width `w` of the circles `|z| = e^{+-2 pi w}` used for aliasing.
    pub alias_width: f64,
    /// Number of entries whose ball was replaced by the decay-envelope disk.
    pub envelope_clamped: usize,
    pub annulus: AnnulusCertificate,
    pub map_hash: String,
}

impl GalerkinOperator {
    /// Signed mode index of row or column `i`.
    pub fn mode(&self, i: usize) -> i64 {
        i as i64 - self.k as i64
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("kind".into(), "galerkin".into()),
            ("map_hash".into(), self.map_hash.clone()),
            ("K".into(), self.k.to_string()),
            ("fft_size".into(), self.fft_size.to_string()),
            ("alias_width".into(), format!("{:e}", self.alias_width)),
            ("envelope_clamped".into(), self.envelope_clamped.to_string()),
            ("annulus".into(), serde_json::to_string(&self.annulus).expect("serializable")),
            ("aliasing_bound".into(), serde_json::to_string(&self.aliasing_bound).expect("serializable")),
        ]
    }

    /// Writes the matrix in the binary dump format with a metadata header.
    pub fn save(&self, path: &Path) -> Result<(), GalerkinError> {
        let f = BufWriter::new(std::fs::File::create(path)?);
        dump::write_binary(f, &self.matrix, &self.metadata())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GalerkinError> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let (matrix, meta) = dump::read_binary(f)?;
        let get = |key: &str| {
            meta.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| GalerkinError::Format(format!("missing key {key}")))
        };
        let bad = |e: &dyn std::fmt::Display| GalerkinError::Format(e.to_string());
        if get("kind")? != "galerkin" {
            return Err(GalerkinError::Format("not a Galerkin archive".into()));
        }
        let k: usize = get("K")?.parse().map_err(|e| bad(&e))?;
        let n = 2 * k + 1;
        if matrix.shape() != (n, n) {
            return Err(GalerkinError::Format("matrix shape does not match K".into()));
        }
        Ok(Self {
            k,
            n,
            fft_size: get("fft_size")?.parse().map_err(|e| bad(&e))?,
            matrix,
            aliasing_bound: serde_json::from_str(&get("aliasing_bound")?).map_err(|e| bad(&e))?,
            alias_width: get("alias_width")?.parse().map_err(|e| bad(&e))?,
            envelope_clamped: get("envelope_clamped")?.parse().map_err(|e| bad(&e))?,
            annulus: serde_json::from_str(&get("annulus")?).map_err(|e| bad(&e))?,
            map_hash: get("map_hash")?,
        })
    }
}

/// Builds the ball Fourier matrix of `Pi_K L_T Pi_K`.
pub fn fourier_matrix(
    map: &CircleMap,
    ann: &AnnulusCertificate,
    k: usize,
    fft_size: usize,
) -> Result<GalerkinOperator, GalerkinError> {
    fourier_matrix_with_tolerance(map, ann, k, fft_size, DEFAULT_ALIAS_TOLERANCE)
}

pub fn fourier_matrix_with_tolerance(
    map: &CircleMap,
    ann: &AnnulusCertificate,
    k: usize,
    fft_size: usize,
    alias_tolerance: f64,
) -> Result<GalerkinOperator, GalerkinError> {
    let n = 2 * k + 1;
    if !fft_size.is_power_of_two() || fft_size < 4 * n {
        return Err(GalerkinError::FftSize { fft_size, min: 4 * n });
    }
    if ann.map_hash != map.hash_hex() {
        return Err(GalerkinError::AnnulusMismatch);
    }
    let (alias_width, row_alias) = aliasing_bounds(map, ann.eta, k, fft_size)?;
    let worst = row_alias.iter().cloned().fold(0.0, f64::max);
    if !(worst <= alias_tolerance) {
        return Err(GalerkinError::AliasingTooLarge { bound: worst, tolerance: alias_tolerance });
    }

    let plan = FftPlan::new(fft_size)?;
    let values = unit_circle_values(map, fft_size)?;
    let inverses: Vec<BallScalar> = values.par_iter().map(|v| v.inv()).collect::<Result<_, _>>()?;

    let modes: Vec<i64> = (-(k as i64)..=k as i64).collect();
    let rows: Vec<Vec<BallScalar>> = modes
        .par_iter()
        .zip(row_alias.par_iter())
        .map(|(&kk, &alias)| row_entries(&plan, &values, &inverses, kk, k, alias))
        .collect::<Result<_, GalerkinError>>()?;

    let env = Envelope::new(ann)?;
    let mut centers = Mat::<Complex64>::zeros(n, n);
    let mut radii = Mat::<f64>::zeros(n, n);
    let mut clamped = 0;
    for (r, row) in rows.iter().enumerate() {
        for (c, entry) in row.iter().enumerate() {
            let (kk, jj) = (modes[r], modes[c]);
            let bound = env.upper(kk, jj);
            if entry.abs_lower() > bound {
                return Err(GalerkinError::DecayViolation { k: kk, j: jj });
            }
            if bound <= entry.rad {
                clamped += 1;
                centers[(r, c)] = Complex64::new(0.0, 0.0);
                radii[(r, c)] = bound;
            } else {
                centers[(r, c)] = entry.mid;
                radii[(r, c)] = entry.rad;
            }
        }
    }
    Ok(GalerkinOperator {
        k,
        n,
        fft_size,
        matrix: BallMatrix::new(centers, radii)?,
        aliasing_bound: row_alias,
        alias_width,
        envelope_clamped: clamped,
        annulus: ann.clone(),
        map_hash: map.hash_hex(),
    })
}

/// Ball samples of `T` at `e^{2 pi i m / N}`.
fn unit_circle_values(map: &CircleMap, size: usize) -> Result<Vec<BallScalar>, GalerkinError> {
    let two_pi_i = BallScalar::exact(Complex64::new(0.0, 2.0)) * BallScalar::pi();
    (0..size)
        .into_par_iter()
        .map(|m| {
            let z = (two_pi_i * BallScalar::ratio(m as i64, size as i64)).exp()?;
            Ok(map.eval(z)?)
        })
        .collect()
}

fn row_entries(
    plan: &FftPlan,
    values: &[BallScalar],
    inverses: &[BallScalar],
    kk: i64,
    k: usize,
    alias: f64,
) -> Result<Vec<BallScalar>, GalerkinError> {
    let size = plan.size();
    let samples: Vec<BallScalar> = if kk >= 0 {
        inverses.iter().map(|v| v.powi(kk)).collect::<Result<_, _>>()?
    } else {
        values.iter().map(|v| v.powi(-kk)).collect::<Result<_, _>>()?
    };
    let spectrum = plan.transform(&samples)?;
    let scale = 1.0 / size as f64;
    let mut row = Vec::with_capacity(2 * k + 1);
    for jj in -(k as i64)..=k as i64 {
        // c_{-j} is read from bin (-j) mod N
        let bin = (-jj).rem_euclid(size as i64) as usize;
        let x = spectrum[bin];
        let entry = BallScalar { mid: x.mid * scale, rad: round::add_up(round::mul_up(x.rad, scale), alias) };
        // Division by a power of two is exact unless the center is subnormal.
        row.push(entry.inflate(f64::MIN_POSITIVE).finite()?);
    }
    Ok(row)
}

/// Chooses the aliasing circle width and returns per-row tail bounds.
///
/// For row `k` the Laurent coefficients of `g = T^{-k}` satisfy
/// `|c_m| <= S_out R^{-m}` for `m > 0` and `|c_m| <= S_in R^{m}` for `m < 0`,
/// with `R = e^{2 pi w}` and `S` the sup of `|g|` on the outer and inner
/// circle. Summing the aliased terms for `|n| <= K` gives
/// `(S_out + S_in) R^{-(N - K)} / (1 - R^{-N})`.
fn aliasing_bounds(map: &CircleMap, eta: f64, k: usize, size: usize) -> Result<(f64, Vec<f64>), GalerkinError> {
    let regular = map.regular_width();
    let cap = if regular.is_finite() { regular / 2.0 } else { f64::INFINITY };
    let mut candidates: Vec<f64> = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|s| (eta * s).min(cap))
        .filter(|w| *w > 0.0)
        .collect();
    candidates.dedup();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for w in candidates {
        let Ok(bounds) = row_alias_for_width(map, w, k, size) else { continue };
        let worst = bounds.iter().cloned().fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(_, b)| worst < b.iter().cloned().fold(0.0, f64::max)) {
            best = Some((w, bounds));
        }
    }
    best.ok_or_else(|| {
        GalerkinError::Map(MapError::Domain("no circle pair suitable for the aliasing bound".into()))
    })
}

fn row_alias_for_width(map: &CircleMap, w: f64, k: usize, size: usize) -> Result<Vec<f64>, GalerkinError> {
    let (out_lo, out_hi) = circle_modulus_range(map, w, MODULUS_ARCS)?;
    let (in_lo, in_hi) = circle_modulus_range(map, -w, MODULUS_ARCS)?;
    if !(out_lo > 0.0 && in_lo > 0.0 && out_hi.is_finite() && in_hi.is_finite()) {
        return Err(GalerkinError::Map(MapError::Domain(format!("T vanishes or blows up near |z| = e^(+-2 pi {w})"))));
    }
    let two_pi_w = log_radius(w).re_lower();
    // ln(1 - R^{-N}) >= ln(1 - e^{-2 pi w N}); guard the tiny-w regime.
    let tail = round::exp_up(-round::mul_down(two_pi_w, size as f64));
    if !(tail < 0.5) {
        return Err(GalerkinError::Map(MapError::Domain("aliasing circle too close to the unit circle".into())));
    }
    let geometric = -round::ln_down(round::sub_down(1.0, tail));
    let mut out = Vec::with_capacity(2 * k + 1);
    for kk in -(k as i64)..=k as i64 {
        let p = kk.unsigned_abs() as f64;
        // ln S on each circle; for k > 0 use 1/inf|T|, for k < 0 use sup|T|.
        let (ln_out, ln_in) = if kk >= 0 {
            (round::mul_up(p, -round::ln_down(out_lo)), round::mul_up(p, -round::ln_down(in_lo)))
        } else {
            (round::mul_up(p, round::ln_up(out_hi)), round::mul_up(p, round::ln_up(in_hi)))
        };
        let ln_s = round::add_up(ln_out.max(ln_in), std::f64::consts::LN_2.next_up());
        let decay = round::mul_down(two_pi_w, (size - k) as f64);
        let ln_bound = round::add_up(round::sub_up(ln_s, decay), geometric);
        out.push(round::exp_up(ln_bound));
    }
    Ok(out)
}

/// Decay envelope `|M_kj| <= e^{2 pi eta |j|} e^{-2 pi rho |k|}` implied by the
/// annulus certificate.
struct Envelope {
    two_pi_eta: f64,
    two_pi_rho: f64,
}

impl Envelope {
    fn new(ann: &AnnulusCertificate) -> Result<Self, GalerkinError> {
        Ok(Self { two_pi_eta: log_radius(ann.eta).re_upper(), two_pi_rho: log_radius(ann.rho).re_lower() })
    }

    fn upper(&self, k: i64, j: i64) -> f64 {
        let e = round::sub_up(
            round::mul_up(self.two_pi_eta, j.unsigned_abs() as f64),
            round::mul_down(self.two_pi_rho, k.unsigned_abs() as f64),
        );
        round::exp_up(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::certify_annulus;

    #[test]
    fn doubling_matrix_is_the_shift_pattern() {
        let map = CircleMap::doubling();
        let ann = certify_annulus(&map, 0.1, 0.19, 64).unwrap();
        let g = fourier_matrix(&map, &ann, 2, 64).unwrap();
        for r in 0..5 {
            for c in 0..5 {
                let (kk, jj) = (g.mode(r), g.mode(c));
                let want = if jj == 2 * kk { 1.0 } else { 0.0 };
                let b = g.matrix.get(r, c);
                assert!(b.contains(Complex64::new(want, 0.0)), "({kk},{jj}) {b}");
                assert!(b.rad <= 1e-12);
            }
        }
    }

    #[test]
    fn cubic_pattern() {
        let map = CircleMap::Power(3);
        let ann = certify_annulus(&map, 0.1, 0.29, 64).unwrap();
        let g = fourier_matrix(&map, &ann, 3, 64).unwrap();
        for r in 0..7 {
            for c in 0..7 {
                let (kk, jj) = (g.mode(r), g.mode(c));
                let want = if jj == 3 * kk { 1.0 } else { 0.0 };
                assert!(g.matrix.get(r, c).contains(Complex64::new(want, 0.0)));
            }
        }
    }

    #[test]
    fn rejects_small_fft() {
        let map = CircleMap::doubling();
        let ann = certify_annulus(&map, 0.1, 0.19, 64).unwrap();
        assert!(matches!(fourier_matrix(&map, &ann, 4, 32), Err(GalerkinError::FftSize { .. })));
        assert!(matches!(fourier_matrix(&map, &ann, 2, 48), Err(GalerkinError::FftSize { .. })));
    }
}
