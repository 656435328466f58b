//! JSON and plain-text renderings of an [`EnclosureCertificate`].

use std::fmt::Write as _;
use std::path::Path;

use super::run::{EnclosureCertificate, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(format!("unknown format {other:?} (json or text)")),
        }
    }
}

pub fn to_json(cert: &EnclosureCertificate) -> String {
    let mut s = serde_json::to_string_pretty(cert).expect("certificate is serializable");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> serde_json::Result<EnclosureCertificate> {
    serde_json::from_str(text)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into())
}

pub fn to_text(cert: &EnclosureCertificate) -> String {
    let mut s = String::new();
    let verdict = match cert.verdict {
        Verdict::Proven => "PROVEN".to_string(),
        Verdict::Failed => match &cert.failure {
            Some(f) => format!("FAILED at {} stage: {}", f.stage, f.message),
            None => "FAILED".to_string(),
        },
    };
    let _ = writeln!(s, "verdict      {verdict}");
    let _ = writeln!(s, "map          {}", cert.map);
    let _ = writeln!(s, "config hash  {}", cert.config_hash);
    let _ = writeln!(s, "preset       {}  K = {}  fft = {}", cert.preset, cert.k, cert.fft_size);
    let w = cert.widths;
    let _ = writeln!(s, "widths       eta = {}  alpha = {}  rho = {}", w.eta, w.alpha, w.rho);
    if let Some(b) = &cert.bounds {
        let _ = writeln!(s, "B            {:.6e}", b.op_norm_bound);
        let _ = writeln!(s, "Delta        {:.6e}", b.discretization_error);
        let _ = writeln!(s, "r            {:.6e}", b.ratio_r);
        let _ = writeln!(s, "delta        {:.6e}", b.delta);
        let _ = writeln!(s, "1/delta      {:.6e}", b.delta_inv);
    }
    if let Some(sc) = &cert.schur {
        let _ = writeln!(s, "schur eps    {:.6e}  C0 = {:.6e}", sc.epsilon, sc.c0);
    }
    if !cert.disks.is_empty() {
        let _ = writeln!(s, "\n{:<6} {:>24} {:>10} {:>14} {:>14} {:>5}", "disk", "center", "radius", "sup r_T", "sup r_M", "mult");
        for d in &cert.disks {
            let center = format!("{:.6}{:+.6}i", d.center.re, d.center.im);
            let mult = d.multiplicity.map(|m| m.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<6} {:>24} {:>10} {:>14} {:>14} {:>5}",
                d.name,
                center,
                d.radius,
                opt(d.sup_bound_t),
                opt(d.transferred_sup),
                mult
            );
        }
    }
    if let Some(f) = cert.failure.as_ref().filter(|f| f.offending_bound.is_some() || f.disk.is_some()) {
        let _ = writeln!(s, "\noffending    {} {}", f.disk.as_deref().unwrap_or(""), opt(f.offending_bound));
    }
    let _ = writeln!(s, "\nsvd calls    {}  wall clock {:.2}s", cert.stats.svd_calls, cert.stats.total_seconds);
    s
}

pub fn write_report(cert: &EnclosureCertificate, path: &Path, format: Format) -> std::io::Result<()> {
    let body = match format {
        Format::Json => to_json(cert),
        Format::Text => to_text(cert),
    };
    std::fs::write(path, body)
}

pub fn read_report(path: &Path) -> std::io::Result<EnclosureCertificate> {
    let text = std::fs::read_to_string(path)?;
    from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}
