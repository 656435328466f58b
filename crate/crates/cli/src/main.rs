use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ruelle::pipeline::plots;
use ruelle::pipeline::report;
use ruelle::pipeline::run::{self, write_outputs};
use ruelle::pipeline::{run_certification, Preset, RunConfig, RunOptions};

const EXIT_FAILED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "ruelle", version, about = "Certified enclosures of transfer-operator spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the expansion annulus only.
    CertifyMap(Common),
    /// Certify the annulus and build the ball Galerkin matrix.
    Discretize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resume: bool,
    },
    /// Full pipeline; writes the certificate, report, CSV and SVG.
    CertifySpectrum {
        #[command(flatten)]
        common: Common,
        /// Reuse the archived Galerkin matrix when it matches the config.
        #[arg(long)]
        resume: bool,
    },
    /// Re-render a saved certificate.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// NONRIGOROUS resolvent heatmap of the Galerkin matrix.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[arg(long, num_args = 4, value_names = ["RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"], allow_negative_numbers = true,
              default_values_t = [-0.6, 1.2, -0.6, 1.2])]
        window: Vec<f64>,
        #[arg(long)]
        resume: bool,
    },
}

fn load(c: &Common) -> Result<RunConfig, ExitCode> {
    let preset = c.preset.map(|p| match p {
        PresetArg::Desk => Preset::Desk,
        PresetArg::Full => Preset::Full,
    });
    let mut cfg = RunConfig::load(&c.config, preset).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(w) = c.workers {
        cfg.workers = w;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

fn stage_exit(e: run::StageError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_FAILED)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::CertifyMap(c) => {
            let cfg = match load(&c) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            match pool(cfg.workers)?.install(|| run::certify_map(&cfg)) {
                Ok((_, ann)) => {
                    println!("{}", serde_json::to_string_pretty(&ann)?);
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Ok(stage_exit(e)),
            }
        }
        Command::Discretize { common, resume } => {
            let cfg = match load(&common) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let res = pool(cfg.workers)?.install(|| {
                let (map, ann) = run::certify_map(&cfg)?;
                run::discretize(&cfg, &map, &ann, resume)
            });
            match res {
                Ok((op, resumed)) => {
                    println!(
                        "{} (K = {}, max radius {:e}{})",
                        run::galerkin_path(&cfg).display(),
                        op.k,
                        op.matrix.max_radius(),
                        if resumed { ", reused" } else { "" }
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Ok(stage_exit(e)),
            }
        }
        Command::CertifySpectrum { common, resume } => {
            let cfg = match load(&common) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let cert = run_certification(&cfg, &RunOptions { resume, cache: true });
            write_outputs(&cert, &cfg.out_dir).with_context(|| format!("writing to {}", cfg.out_dir.display()))?;
            print!("{}", report::to_text(&cert));
            Ok(if cert.is_proven() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILED) })
        }
        Command::Report { input, format } => {
            let cert = report::read_report(&input).with_context(|| format!("reading {}", input.display()))?;
            match format {
                FormatArg::Json => print!("{}", report::to_json(&cert)),
                FormatArg::Text => print!("{}", report::to_text(&cert)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Heatmap { common, grid, window, resume } => {
            let cfg = match load(&common) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let res = pool(cfg.workers)?.install(|| -> Result<plots::Heatmap, run::StageError> {
                let (map, ann) = run::certify_map(&cfg)?;
                let (op, _) = run::discretize(&cfg, &map, &ann, resume)?;
                let centers = op.matrix.centers().to_owned();
                Ok(plots::heatmap(&centers, (window[0], window[1]), (window[2], window[3]), grid))
            });
            match res {
                Ok(h) => {
                    std::fs::create_dir_all(&cfg.out_dir)?;
                    std::fs::write(cfg.out_dir.join("heatmap.csv"), h.to_csv())?;
                    std::fs::write(cfg.out_dir.join("heatmap.svg"), h.to_svg())?;
                    println!("NONRIGOROUS heatmap written to {}", cfg.out_dir.display());
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => Ok(stage_exit(e)),
            }
        }
    }
}
