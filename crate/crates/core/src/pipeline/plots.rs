//! CSV and SVG output. The heatmap is a plain floating-point estimate and
//! is labelled as such in every file it produces.

use std::fmt::Write as _;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use super::run::EnclosureCertificate;

pub fn disks_csv(cert: &EnclosureCertificate) -> String {
    let mut s = String::from("name,center_re,center_im,radius,sup_bound_t,transferred_sup,multiplicity\n");
    let f = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    for d in &cert.disks {
        let m = d.multiplicity.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{},{},{}",
            d.name,
            d.center.re,
            d.center.im,
            d.radius,
            f(d.sup_bound_t),
            f(d.transferred_sup),
            m
        );
    }
    s
}

/// Disks in the complex plane, with the unit circle for reference.
pub fn disks_svg(cert: &EnclosureCertificate) -> String {
    let size = 600.0;
    let extent = cert
        .disks
        .iter()
        .map(|d| d.center.re.abs().max(d.center.im.abs()) + d.radius)
        .fold(1.1f64, f64::max);
    let scale = size / (2.0 * extent);
    let px = |z: Complex64| ((z.re + extent) * scale, (extent - z.im) * scale);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (ox, oy) = px(Complex64::new(0.0, 0.0));
    let _ = writeln!(s, r#"<line x1="0" y1="{oy}" x2="{size}" y2="{oy}" stroke="gray"/>"#);
    let _ = writeln!(s, r#"<line x1="{ox}" y1="0" x2="{ox}" y2="{size}" stroke="gray"/>"#);
    let _ = writeln!(s, r#"<circle cx="{ox}" cy="{oy}" r="{}" fill="none" stroke="gray" stroke-dasharray="4 4"/>"#, scale);
    for d in &cert.disks {
        let (x, y) = px(d.center);
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="{:.3}" fill="none" stroke="black"><title>{} center {} radius {}</title></circle>"#,
            d.radius * scale,
            d.name,
            d.center,
            d.radius
        );
        let _ = writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="12">{}</text>"#, x + d.radius * scale + 3.0, y, d.name);
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Clone, Debug)]
pub struct Heatmap {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub n: usize,
    /// `values[row * n + col]` is the estimate of `log10 ||(z - A)^{-1}||`,
    /// rows running over the imaginary axis.
    pub values: Vec<f64>,
}

/// NONRIGOROUS: `log10(1 / sigma_min(z - A))` from a floating SVD on an
/// `n x n` grid over `re x im`.
pub fn heatmap(a: &Mat<Complex64>, re: (f64, f64), im: (f64, f64), n: usize) -> Heatmap {
    let dim = a.nrows();
    let step = |lo: f64, hi: f64, k: usize| if n > 1 { lo + (hi - lo) * k as f64 / (n - 1) as f64 } else { lo };
    let values = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let z = Complex64::new(step(re.0, re.1, idx % n), step(im.0, im.1, idx / n));
            let m = Mat::from_fn(dim, dim, |i, j| if i == j { z - a[(i, j)] } else { -a[(i, j)] });
            match m.singular_values() {
                Ok(s) => {
                    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
                    -smin.log10()
                }
                Err(_) => f64::NAN,
            }
        })
        .collect();
    Heatmap { re, im, n, values }
}

impl Heatmap {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# NONRIGOROUS floating-point estimate of log10 ||(z - A)^-1||\nre,im,log10_resolvent\n");
        let n = self.n;
        for (idx, v) in self.values.iter().enumerate() {
            let x = self.re.0 + (self.re.1 - self.re.0) * (idx % n) as f64 / (n.max(2) - 1) as f64;
            let y = self.im.0 + (self.im.1 - self.im.0) * (idx / n) as f64 / (n.max(2) - 1) as f64;
            let _ = writeln!(s, "{x:e},{y:e},{v:e}");
        }
        s
    }

    pub fn to_svg(&self) -> String {
        let cell = 6.0;
        let n = self.n;
        let side = cell * n as f64;
        let finite = self.values.iter().cloned().filter(|v| v.is_finite());
        let lo = finite.clone().fold(f64::INFINITY, f64::min);
        let hi = finite.fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-12);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{}">"#, side + 20.0);
        let _ = writeln!(s, r#"<!-- NONRIGOROUS pseudospectrum estimate -->"#);
        for (idx, v) in self.values.iter().enumerate() {
            let (col, row) = (idx % n, idx / n);
            let t = if v.is_finite() { (v - lo) / span } else { 1.0 };
            let g = (255.0 * (1.0 - t)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="rgb(255,{g},{g})"/>"#,
                col as f64 * cell,
                (n - 1 - row) as f64 * cell
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="4" y="{}" font-size="12">NONRIGOROUS: log10 resolvent from {lo:.2} to {hi:.2}</text>"#,
            side + 15.0
        );
        s.push_str("</svg>\n");
        s
    }
}
