//! Run configuration, read from TOML.
//!
//! Top-level sections give the desk-scale values; `[preset.full]` (and
//! optionally `[preset.desk]`) override `K`, `fft_size`, the exclusion
//! radius and the disk list for the selected scale.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::expr::{self, ExprError};
use crate::ball::BallScalar;
use crate::contour::{check_disjoint, Disk};
use crate::maps::{Blaschke, CircleMap, PerturbedDoubling};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config syntax: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("expression {text:?}: {source}")]
    Expr { text: String, source: ExprError },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Full,
}

impl std::str::FromStr for Preset {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            other => Err(ConfigError::Invalid(format!("unknown preset {other:?}"))),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preset::Desk => "desk",
            Preset::Full => "full",
        })
    }
}

/// Map declaration with coefficients kept as their source expressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Blaschke { zeros: Vec<String>, scale: String },
    PerturbedDoubling { b: String },
    Power { degree: u32 },
}

fn eval(text: &str) -> Result<expr::Value, ConfigError> {
    expr::parse(text).map_err(|source| ConfigError::Expr { text: text.to_string(), source })
}

impl MapSpec {
    pub fn build(&self) -> Result<CircleMap, ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        match self {
            MapSpec::Blaschke { zeros, scale } => {
                let zs = zeros.iter().map(|z| eval(z).map(|v| v.to_ball())).collect::<Result<Vec<BallScalar>, _>>()?;
                let b = Blaschke::new(zs, eval(scale)?.to_ball()).map_err(|e| invalid(&e))?;
                Ok(CircleMap::Blaschke(b))
            }
            MapSpec::PerturbedDoubling { b } => {
                let q = eval(b)?
                    .as_rational()
                    .ok_or_else(|| ConfigError::Invalid(format!("b = {b:?} must be an exact rational")))?;
                Ok(CircleMap::PerturbedDoubling(PerturbedDoubling::new(q).map_err(|e| invalid(&e))?))
            }
            MapSpec::Power { degree } => {
                if *degree < 2 {
                    return Err(ConfigError::Invalid("power map needs degree >= 2".into()));
                }
                Ok(CircleMap::Power(*degree))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskSpec {
    pub name: String,
    pub center_expr: String,
    pub center: Complex64,
    pub radius: f64,
}

impl DiskSpec {
    pub fn disk(&self) -> Disk {
        Disk { center: self.center, radius: self.radius }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub map: MapSpec,
    pub eta: f64,
    pub alpha: f64,
    pub rho: f64,
    pub subdivisions: usize,
    pub k: usize,
    pub fft_size: usize,
    pub alias_tolerance: f64,
    pub exclusion_radius: f64,
    pub disks: Vec<DiskSpec>,
    pub initial_arcs: usize,
    pub max_arcs: usize,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub preset: Preset,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    map: MapSpec,
    annulus: RawAnnulus,
    discretization: RawScale,
    enclosure: RawEnclosure,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    preset: BTreeMap<String, RawPreset>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnnulus {
    eta: f64,
    alpha: f64,
    rho: f64,
    #[serde(default = "default_subdivisions")]
    subdivisions: usize,
}

fn default_subdivisions() -> usize {
    256
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScale {
    #[serde(rename = "K")]
    k: usize,
    fft_size: usize,
    alias_tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnclosure {
    exclusion_radius: f64,
    #[serde(default)]
    disks: Vec<RawDisk>,
    initial_arcs: Option<usize>,
    max_arcs: Option<usize>,
}

#[derive(Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisk {
    name: Option<String>,
    center: String,
    radius: f64,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    workers: Option<usize>,
    out: Option<PathBuf>,
    preset: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPreset {
    #[serde(rename = "K")]
    k: Option<usize>,
    fft_size: Option<usize>,
    alias_tolerance: Option<f64>,
    exclusion_radius: Option<f64>,
    disks: Option<Vec<RawDisk>>,
    max_arcs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path, preset: Option<Preset>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, preset)
    }

    pub fn parse(text: &str, preset: Option<Preset>) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let preset = match (preset, &raw.run.preset) {
            (Some(p), _) => p,
            (None, Some(s)) => s.parse()?,
            (None, None) => Preset::Desk,
        };
        for key in raw.preset.keys() {
            key.parse::<Preset>()?;
        }
        let mut k = raw.discretization.k;
        let mut fft_size = raw.discretization.fft_size;
        let mut alias_tolerance = raw.discretization.alias_tolerance;
        let mut exclusion_radius = raw.enclosure.exclusion_radius;
        let mut disks = raw.enclosure.disks.clone();
        let mut max_arcs = raw.enclosure.max_arcs;
        if let Some(p) = raw.preset.get(&preset.to_string()) {
            k = p.k.unwrap_or(k);
            fft_size = p.fft_size.unwrap_or(fft_size);
            alias_tolerance = p.alias_tolerance.or(alias_tolerance);
            exclusion_radius = p.exclusion_radius.unwrap_or(exclusion_radius);
            disks = p.disks.clone().unwrap_or(disks);
            max_arcs = p.max_arcs.or(max_arcs);
        }
        let disks = disks
            .iter()
            .enumerate()
            .map(|(i, d)| {
                Ok(DiskSpec {
                    name: d.name.clone().unwrap_or_else(|| format!("F{}", i + 1)),
                    center_expr: d.center.clone(),
                    center: eval(&d.center)?.center(),
                    radius: d.radius,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let cfg = RunConfig {
            map: raw.map,
            eta: raw.annulus.eta,
            alpha: raw.annulus.alpha,
            rho: raw.annulus.rho,
            subdivisions: raw.annulus.subdivisions,
            k,
            fft_size,
            alias_tolerance: alias_tolerance.unwrap_or(crate::galerkin::DEFAULT_ALIAS_TOLERANCE),
            exclusion_radius,
            disks,
            initial_arcs: raw.enclosure.initial_arcs.unwrap_or(16),
            max_arcs: max_arcs.unwrap_or(1_000_000),
            workers: raw.run.workers.unwrap_or(0),
            out_dir: raw.run.out.unwrap_or_else(|| PathBuf::from("out")),
            preset,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(0.0 < self.eta && self.eta < self.alpha && self.alpha < self.rho && self.rho.is_finite()) {
            return bad(format!("need 0 < eta < alpha < rho, got {} {} {}", self.eta, self.alpha, self.rho));
        }
        if self.subdivisions < 8 {
            return bad("annulus.subdivisions must be at least 8".into());
        }
        if self.k == 0 {
            return bad("K must be positive".into());
        }
        let n = 2 * self.k + 1;
        if !self.fft_size.is_power_of_two() || self.fft_size < 4 * n {
            return bad(format!("fft_size must be a power of two >= {}", 4 * n));
        }
        if !(self.alias_tolerance > 0.0) {
            return bad("alias_tolerance must be positive".into());
        }
        if self.initial_arcs == 0 || self.max_arcs < self.initial_arcs {
            return bad("need 0 < initial_arcs <= max_arcs".into());
        }
        let all = self.all_disks()?;
        check_disjoint(&all).map_err(|e| {
            let name = |i: usize| all_names(self)[i].clone();
            match e {
                crate::contour::ContourError::DisksOverlap(i, j) => {
                    ConfigError::Invalid(format!("disks {} and {} overlap", name(i), name(j)))
                }
                other => ConfigError::Invalid(other.to_string()),
            }
        })?;
        self.map.build()?;
        Ok(())
    }

    /// `F0` (the exclusion disk at the origin) followed by the resonance disks.
    pub fn all_disks(&self) -> Result<Vec<Disk>, ConfigError> {
        let f0 = Disk::new(Complex64::new(0.0, 0.0), self.exclusion_radius).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut out = vec![f0];
        for d in &self.disks {
            out.push(Disk::new(d.center, d.radius).map_err(|e| ConfigError::Invalid(format!("{}: {e}", d.name)))?);
        }
        Ok(out)
    }

    pub fn disk_names(&self) -> Vec<String> {
        all_names(self)
    }

    /// Hash of everything that affects the certificate (not workers or paths).
    pub fn hash_hex(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.out_dir = PathBuf::new();
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("serializable")))
    }
}

fn all_names(cfg: &RunConfig) -> Vec<String> {
    std::iter::once("F0".to_string()).chain(cfg.disks.iter().map(|d| d.name.clone())).collect()
}
