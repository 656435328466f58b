//! The end-to-end certification run.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{Preset, RunConfig};
use crate::ball::round;
use crate::bounds::{self, Widths};
use crate::contour::{self, CircleOptions, ContourCertificate, ContourError, ExclosureCertificate, SvdCache};
use crate::galerkin::{self, GalerkinOperator};
use crate::maps::{certify_annulus, AnnulusCertificate, CircleMap};
use crate::schur::{self, CertifiedSchur, SchurError, SchurSummary};

pub const SCHEMA_VERSION: u32 = 1;

/// Relative slack between the contour target and the gate's requirement, so
/// that the rounded usable delta still covers the budget delta.
const GATE_SLACK: f64 = 1.0 + 1.0 / (1u64 << 40) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Annulus,
    Galerkin,
    Bounds,
    Schur,
    Gate,
    Contour,
    Exclosure,
    Multiplicity,
    Io,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).expect("serializable");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Proven,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: Stage,
    pub message: String,
    /// The bound that broke the argument, when there is a single one.
    pub offending_bound: Option<f64>,
    pub disk: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalerkinSummary {
    pub matrix_hash: String,
    pub max_radius: f64,
    pub max_aliasing_bound: f64,
    pub alias_width: f64,
    pub envelope_clamped: usize,
    pub resumed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsSummary {
    /// `B`, bound for `||L_T||` from `A_eta` to `A_alpha`.
    pub op_norm_bound: f64,
    pub projection_defect: f64,
    /// `Delta`, bound for `||L_T - L_{T,K}||` from `A_alpha` to `A_0`.
    pub discretization_error: f64,
    pub ratio_r: f64,
    pub delta: f64,
    pub delta_inv: f64,
    /// Required bound for the resolvent of `T` on every circle.
    pub contour_target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSummary {
    /// Smallest `delta0` (inverse boundary sup over `T`) the budget admits.
    pub required_delta0: f64,
    pub usable_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskReport {
    pub name: String,
    pub center: Complex64,
    pub radius: f64,
    /// Upper bound of `||(z - T)^{-1}||` on the circle.
    pub sup_bound_t: Option<f64>,
    /// Upper bound of `||(z - M')^{-1}||` on the circle for every member `M'`.
    pub transferred_sup: Option<f64>,
    pub arcs: usize,
    pub svd_calls: usize,
    pub multiplicity: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub workers: usize,
    pub svd_calls: usize,
    pub stage_seconds: BTreeMap<String, f64>,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnclosureCertificate {
    pub schema_version: u32,
    pub map: String,
    pub map_hash: String,
    pub config_hash: String,
    pub preset: Preset,
    pub widths: Widths,
    #[serde(rename = "K")]
    pub k: usize,
    pub fft_size: usize,
    pub annulus: Option<AnnulusCertificate>,
    pub galerkin: Option<GalerkinSummary>,
    pub bounds: Option<BoundsSummary>,
    pub schur: Option<SchurSummary>,
    pub gate: Option<GateSummary>,
    pub disks: Vec<DiskReport>,
    pub exclosure: Option<ExclosureCertificate>,
    pub verdict: Verdict,
    pub failure: Option<Failure>,
    /// Rounding direction of each reported numeric field.
    pub rounding: BTreeMap<String, String>,
    pub stats: RunStats,
}

impl EnclosureCertificate {
    pub fn is_proven(&self) -> bool {
        self.verdict == Verdict::Proven
    }

    /// The certificate with timing fields zeroed, for byte comparisons.
    pub fn without_timings(&self) -> Self {
        let mut c = self.clone();
        c.stats = RunStats { svd_calls: c.stats.svd_calls, ..Default::default() };
        c
    }
}

fn rounding_table() -> BTreeMap<String, String> {
    let up = [
        "annulus.inner_image_upper",
        "bounds.op_norm_bound",
        "bounds.projection_defect",
        "bounds.discretization_error",
        "bounds.ratio_r",
        "bounds.delta",
        "gate.required_delta0",
        "galerkin.max_radius",
        "galerkin.max_aliasing_bound",
        "schur.epsilon",
        "schur.c0",
        "disks.sup_bound_t",
        "disks.transferred_sup",
        "exclosure.transferred_sups",
    ];
    let down = [
        "annulus.outer_image_lower",
        "bounds.delta_inv",
        "bounds.contour_target",
        "gate.usable_delta",
        "exclosure.delta0",
        "exclosure.usable_delta",
    ];
    up.iter()
        .map(|k| (k.to_string(), "upper".to_string()))
        .chain(down.iter().map(|k| (k.to_string(), "lower".to_string())))
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Reuse `galerkin.bin` from the output directory when it matches.
    pub resume: bool,
    /// Keep SVD results across contours of the same run.
    pub cache: bool,
}

/// Failure of a stage, before it is folded into a certificate.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
    pub offending_bound: Option<f64>,
    pub disk: Option<String>,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for StageError {}

fn fail(stage: Stage) -> impl Fn(&dyn std::fmt::Display) -> StageError {
    move |e| StageError { stage, message: e.to_string(), offending_bound: None, disk: None }
}

pub fn galerkin_path(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join("galerkin.bin")
}

/// Certifies the expansion annulus of the configured map.
pub fn certify_map(cfg: &RunConfig) -> Result<(CircleMap, AnnulusCertificate), StageError> {
    let map = cfg.map.build().map_err(|e| fail(Stage::Config)(&e))?;
    let ann = certify_annulus(&map, cfg.eta, cfg.rho, cfg.subdivisions)
        .and_then(|a| a.with_alpha(cfg.alpha))
        .map_err(|e| fail(Stage::Annulus)(&e))?;
    Ok((map, ann))
}

/// Builds (or reloads) the ball Galerkin matrix. Returns whether it was reloaded.
pub fn discretize(
    cfg: &RunConfig,
    map: &CircleMap,
    ann: &AnnulusCertificate,
    resume: bool,
) -> Result<(GalerkinOperator, bool), StageError> {
    let path = galerkin_path(cfg);
    if resume && path.exists() {
        match GalerkinOperator::load(&path) {
            Ok(op)
                if op.map_hash == map.hash_hex()
                    && op.k == cfg.k
                    && op.fft_size == cfg.fft_size
                    && op.annulus.eta == ann.eta
                    && op.annulus.rho == ann.rho =>
            {
                log::info!("reusing {}", path.display());
                return Ok((op, true));
            }
            Ok(_) => log::warn!("{} does not match the config; recomputing", path.display()),
            Err(e) => log::warn!("cannot reload {}: {e}; recomputing", path.display()),
        }
    }
    let op = galerkin::fourier_matrix_with_tolerance(map, ann, cfg.k, cfg.fft_size, cfg.alias_tolerance)
        .map_err(|e| fail(Stage::Galerkin)(&e))?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| fail(Stage::Io)(&e))?;
    op.save(&path).map_err(|e| fail(Stage::Io)(&e))?;
    Ok((op, false))
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    cert: EnclosureCertificate,
    log: Option<BufWriter<File>>,
    clock: Instant,
}

impl Runner<'_> {
    fn note(&mut self, line: &str) {
        log::info!("{line}");
        if let Some(w) = self.log.as_mut() {
            let _ = writeln!(w, "{line}");
        }
    }

    fn lap(&mut self, stage: Stage) {
        let t = self.clock.elapsed().as_secs_f64();
        let spent: f64 = self.cert.stats.stage_seconds.values().sum();
        self.cert.stats.stage_seconds.insert(stage.to_string(), t - spent);
    }
}

/// Runs every stage. Failures are recorded in the returned certificate
/// rather than returned as errors.
pub fn run_certification(cfg: &RunConfig, opts: &RunOptions) -> EnclosureCertificate {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build();
    let go = || run_inner(cfg, opts);
    match pool {
        Ok(p) => p.install(go),
        Err(_) => go(),
    }
}

fn run_inner(cfg: &RunConfig, opts: &RunOptions) -> EnclosureCertificate {
    let clock = Instant::now();
    let map_desc = cfg.map.build().map(|m| (m.describe(), m.hash_hex())).unwrap_or_default();
    let log = std::fs::create_dir_all(&cfg.out_dir)
        .and_then(|_| File::create(cfg.out_dir.join("run.log")))
        .map(BufWriter::new)
        .ok();
    let mut r = Runner {
        cfg,
        cert: EnclosureCertificate {
            schema_version: SCHEMA_VERSION,
            map: map_desc.0,
            map_hash: map_desc.1,
            config_hash: cfg.hash_hex(),
            preset: cfg.preset,
            widths: Widths { eta: cfg.eta, alpha: cfg.alpha, rho: cfg.rho },
            k: cfg.k,
            fft_size: cfg.fft_size,
            annulus: None,
            galerkin: None,
            bounds: None,
            schur: None,
            gate: None,
            disks: Vec::new(),
            exclosure: None,
            verdict: Verdict::Failed,
            failure: None,
            rounding: rounding_table(),
            stats: RunStats { workers: rayon::current_num_threads(), ..Default::default() },
        },
        log,
        clock,
    };
    if let Err(e) = stages(&mut r, opts) {
        r.note(&format!("FAILED: {e}"));
        r.cert.failure = Some(Failure {
            stage: e.stage,
            message: e.message,
            offending_bound: e.offending_bound,
            disk: e.disk,
        });
    } else {
        r.cert.verdict = Verdict::Proven;
        r.note("verdict: proven");
    }
    r.cert.stats.total_seconds = r.clock.elapsed().as_secs_f64();
    if let Some(mut w) = r.log.take() {
        let _ = w.flush();
    }
    r.cert
}

fn stages(r: &mut Runner<'_>, opts: &RunOptions) -> Result<(), StageError> {
    let cfg = r.cfg;
    r.note(&format!("map {} ({})", r.cert.map, cfg.preset));
    let (map, ann) = certify_map(cfg)?;
    r.note(&format!(
        "annulus: |T| >= {:e} outside, <= {:e} inside ({} + {} arcs)",
        ann.outer_image_lower, ann.inner_image_upper, ann.outer_arcs, ann.inner_arcs
    ));
    r.cert.annulus = Some(ann.clone());
    r.lap(Stage::Annulus);

    let (op, resumed) = discretize(cfg, &map, &ann, opts.resume)?;
    r.cert.galerkin = Some(GalerkinSummary {
        matrix_hash: op.matrix.hash_hex(),
        max_radius: op.matrix.max_radius(),
        max_aliasing_bound: op.aliasing_bound.iter().cloned().fold(0.0, f64::max),
        alias_width: op.alias_width,
        envelope_clamped: op.envelope_clamped,
        resumed,
    });
    r.note(&format!("galerkin: K = {}, max radius {:e}", op.k, op.matrix.max_radius()));
    r.lap(Stage::Galerkin);

    let widths = Widths::new(cfg.eta, cfg.alpha, cfg.rho).map_err(|e| fail(Stage::Bounds)(&e))?;
    let budget = bounds::budget_for(widths, cfg.k, cfg.exclusion_radius).map_err(|e| fail(Stage::Bounds)(&e))?;
    let b = bounds::op_norm_bound(widths).map_err(|e| fail(Stage::Bounds)(&e))?;
    let proj = bounds::projection_defect(cfg.k, cfg.alpha, cfg.eta).map_err(|e| fail(Stage::Bounds)(&e))?;
    r.note(&format!("bounds: B = {b:e}, Delta = {:e}, r = {:e}, 1/delta >= {:e}", budget.discretization_error, budget.ratio_r, budget.delta_inv));
    r.lap(Stage::Bounds);

    let cs = schur::certify_schur(&op.matrix).map_err(|e| fail(Stage::Schur)(&e))?;
    r.cert.schur = Some(cs.summary());
    r.note(&format!("schur: epsilon = {:e}, C0 = {:e}", cs.epsilon, cs.c0));
    r.lap(Stage::Schur);

    let four_a = {
        let a = round::add_up(1.0, cs.epsilon);
        round::mul_up(round::mul_up(4.0, round::mul_up(a, a)), GATE_SLACK)
    };
    let target = round::div_down(budget.delta_inv, four_a);
    r.cert.bounds = Some(BoundsSummary {
        op_norm_bound: b,
        projection_defect: proj,
        discretization_error: budget.discretization_error,
        ratio_r: budget.ratio_r,
        delta: budget.delta,
        delta_inv: budget.delta_inv,
        contour_target: target,
    });
    let required = round::mul_up(four_a, budget.delta);
    let usable = schur::pseudospectrum_gate(&cs, required).map_err(|e| {
        let mut err = fail(Stage::Gate)(&e);
        if let SchurError::Delta0TooSmall { threshold, .. } = e {
            err.offending_bound = Some(threshold);
        }
        err
    })?;
    r.cert.gate = Some(GateSummary { required_delta0: required, usable_delta: usable });
    r.lap(Stage::Gate);

    let disks = cfg.all_disks().map_err(|e| fail(Stage::Config)(&e))?;
    let names = cfg.disk_names();
    r.cert.disks = disks
        .iter()
        .zip(&names)
        .map(|(d, n)| DiskReport {
            name: n.clone(),
            center: d.center,
            radius: d.radius,
            sup_bound_t: None,
            transferred_sup: None,
            arcs: 0,
            svd_calls: 0,
            multiplicity: None,
        })
        .collect();
    // cheap precondition before any contour work
    for i in 0..cs.dim() {
        let z = cs.t[(i, i)];
        if !disks.iter().any(|d| d.strictly_contains(z)) {
            let mut e = fail(Stage::Exclosure)(&ContourError::DiagonalOutsideAllDisks(i));
            e.offending_bound = Some(z.norm());
            return Err(e);
        }
    }

    let t = cs.t_ball();
    let cache = opts.cache.then(SvdCache::new);
    let circle = CircleOptions { initial_arcs: cfg.initial_arcs, max_arcs: cfg.max_arcs, ..Default::default() };
    let mut contours: Vec<ContourCertificate> = Vec::new();
    for (i, d) in disks.iter().enumerate() {
        let name = names[i].clone();
        let mut arc_log = Vec::new();
        let res = contour::certify_circle(&t, *d, target, &circle, cache.as_ref(), Some(&mut arc_log));
        if let Some(w) = r.log.as_mut() {
            let _ = w.write_all(&arc_log);
        }
        match res {
            Ok(c) => {
                r.note(&format!("{name}: sup ||(z-T)^-1|| <= {:e} ({} arcs, {} svds)", c.sup_bound, c.arcs.len(), c.svd_calls));
                r.cert.stats.svd_calls += c.svd_calls;
                let rep = &mut r.cert.disks[i];
                rep.sup_bound_t = Some(c.sup_bound);
                rep.arcs = c.arcs.len();
                rep.svd_calls = c.svd_calls;
                rep.transferred_sup = schur::resolvent_transfer(&cs, Complex64::new(d.modulus_upper(), 0.0), c.sup_bound).ok();
                contours.push(c);
            }
            Err(e) => {
                let mut err = fail(Stage::Contour)(&e);
                err.disk = Some(name);
                if let ContourError::TargetUnreachable { lower, .. } = e {
                    err.offending_bound = Some(lower);
                }
                return Err(err);
            }
        }
    }
    r.lap(Stage::Contour);

    let ex = contour::exclosure(&cs, &disks, budget.delta, &contours).map_err(|e| {
        let mut err = fail(Stage::Exclosure)(&e);
        if let ContourError::BoundExceedsBudget { bound, disk, .. } = e {
            err.offending_bound = Some(bound);
            err.disk = names.get(disk).cloned();
        }
        err
    })?;
    r.note(&format!("exclosure: delta0 = {:e}, usable delta = {:e} >= {:e}", ex.delta0, ex.usable_delta, ex.delta));
    r.cert.exclosure = Some(ex);
    r.lap(Stage::Exclosure);

    multiplicities(r, &cs, &disks)?;
    r.lap(Stage::Multiplicity);
    Ok(())
}

fn multiplicities(r: &mut Runner<'_>, cs: &CertifiedSchur, disks: &[contour::Disk]) -> Result<(), StageError> {
    for (i, d) in disks.iter().enumerate() {
        let m = contour::multiplicity_count(cs, d).map_err(|e| {
            let mut err = fail(Stage::Multiplicity)(&e);
            err.disk = Some(r.cert.disks[i].name.clone());
            err
        })?;
        r.cert.disks[i].multiplicity = Some(m);
        let line = format!("{}: multiplicity {m}", r.cert.disks[i].name);
        r.note(&line);
    }
    Ok(())
}

/// Writes `certificate.json`, `certificate.txt`, `disks.csv` and `disks.svg`.
pub fn write_outputs(cert: &EnclosureCertificate, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    super::report::write_report(cert, &dir.join("certificate.json"), super::report::Format::Json)?;
    super::report::write_report(cert, &dir.join("certificate.txt"), super::report::Format::Text)?;
    std::fs::write(dir.join("disks.csv"), super::plots::disks_csv(cert))?;
    std::fs::write(dir.join("disks.svg"), super::plots::disks_svg(cert))?;
    Ok(())
}
