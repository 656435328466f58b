//! Config-driven certification runs and their outputs.

pub mod config;
pub mod expr;
pub mod plots;
pub mod report;
pub mod run;

pub use config::{ConfigError, Preset, RunConfig};
pub use run::{run_certification, EnclosureCertificate, RunOptions, Stage, Verdict};
