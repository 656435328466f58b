//! Persistence for [`BallMatrix`].
//!
//! Text layout (UTF-8):
//!
//! ```text
//! # key = value            (zero or more metadata lines)
//! ballmatrix v1 <rows> <cols>
//! <re> <im> <rad>          (one line per entry, row-major)
//! ```
//!
//! Floats are written in shortest round-trip form, so reloading is exact.
//!
//! Binary layout (little endian): the 8-byte magic `BALLMAT1`, `u64` rows,
//! `u64` cols, `u64` metadata byte length, the metadata as `key=value\n`
//! lines, then `rows * cols` triples of `f64` (re, im, rad) in row-major
//! order.

use std::io::{BufRead, Read, Write};

use faer::Mat;
use num_complex::Complex64;

use super::{BallError, BallMatrix};

pub type Metadata = Vec<(String, String)>;

const MAGIC: &[u8; 8] = b"BALLMAT1";

pub fn write_text(mut w: impl Write, m: &BallMatrix, meta: &[(String, String)]) -> Result<(), BallError> {
    for (k, v) in meta {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "ballmatrix v1 {} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let b = m.get(i, j);
            writeln!(w, "{:e} {:e} {:e}", b.mid.re, b.mid.im, b.rad)?;
        }
    }
    Ok(())
}

pub fn read_text(r: impl BufRead) -> Result<(BallMatrix, Metadata), BallError> {
    let mut meta = Vec::new();
    let mut lines = r.lines();
    let (rows, cols) = loop {
        let line = lines.next().ok_or_else(|| fmt_err("missing header"))??;
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest.split_once('=').ok_or_else(|| fmt_err("metadata line without '='"))?;
            meta.push((k.trim().to_string(), v.trim().to_string()));
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["ballmatrix", "v1", r, c] => break (parse_usize(r)?, parse_usize(c)?),
            _ => return Err(fmt_err(&format!("bad header {line:?}"))),
        }
    };
    let mut centers = Mat::zeros(rows, cols);
    let mut radii = Mat::zeros(rows, cols);
    for idx in 0..rows * cols {
        let line = lines.next().ok_or_else(|| fmt_err("truncated entry list"))??;
        let mut it = line.split_whitespace().map(parse_f64);
        let (re, im, rad) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(a), Some(b), Some(c), None) => (a?, b?, c?),
            _ => return Err(fmt_err(&format!("entry {idx}: expected three numbers"))),
        };
        centers[(idx / cols, idx % cols)] = Complex64::new(re, im);
        radii[(idx / cols, idx % cols)] = rad;
    }
    Ok((BallMatrix::new(centers, radii)?, meta))
}

pub fn write_binary(mut w: impl Write, m: &BallMatrix, meta: &[(String, String)]) -> Result<(), BallError> {
    let mut header = String::new();
    for (k, v) in meta {
        header.push_str(&format!("{k}={v}\n"));
    }
    w.write_all(MAGIC)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    let mut buf = Vec::with_capacity(24 * m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let b = m.get(i, j);
            buf.extend_from_slice(&b.mid.re.to_le_bytes());
            buf.extend_from_slice(&b.mid.im.to_le_bytes());
            buf.extend_from_slice(&b.rad.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary(mut r: impl Read) -> Result<(BallMatrix, Metadata), BallError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(fmt_err("bad magic"));
    }
    let rows = read_u64(&mut r)? as usize;
    let cols = read_u64(&mut r)? as usize;
    let meta_len = read_u64(&mut r)? as usize;
    if rows.checked_mul(cols).and_then(|x| x.checked_mul(24)).is_none() || meta_len > 1 << 24 {
        return Err(fmt_err("implausible dimensions"));
    }
    let mut header = vec![0u8; meta_len];
    r.read_exact(&mut header)?;
    let header = String::from_utf8(header).map_err(|_| fmt_err("metadata is not UTF-8"))?;
    let mut meta = Vec::new();
    for line in header.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| fmt_err("metadata line without '='"))?;
        meta.push((k.to_string(), v.to_string()));
    }
    let mut centers = Mat::zeros(rows, cols);
    let mut radii = Mat::zeros(rows, cols);
    let mut triple = [0u8; 24];
    for i in 0..rows {
        for j in 0..cols {
            r.read_exact(&mut triple)?;
            let f = |k: usize| f64::from_le_bytes(triple[8 * k..8 * k + 8].try_into().unwrap());
            centers[(i, j)] = Complex64::new(f(0), f(1));
            radii[(i, j)] = f(2);
        }
    }
    Ok((BallMatrix::new(centers, radii)?, meta))
}

fn read_u64(r: &mut impl Read) -> Result<u64, BallError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn parse_usize(s: &str) -> Result<usize, BallError> {
    s.parse().map_err(|_| fmt_err(&format!("bad dimension {s:?}")))
}

fn parse_f64(s: &str) -> Result<f64, BallError> {
    s.parse().map_err(|_| fmt_err(&format!("bad number {s:?}")))
}

fn fmt_err(msg: &str) -> BallError {
    BallError::Format(msg.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::BallScalar;

    fn sample() -> BallMatrix {
        BallMatrix::from_fn(3, 2, |i, j| BallScalar {
            mid: Complex64::new(1.0 / (1.0 + i as f64), -(j as f64) * 0.1),
            rad: 1e-17 * (i + j) as f64,
        })
        .unwrap()
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let m = sample();
        let meta = vec![("k".to_string(), "7".to_string())];
        let mut buf = Vec::new();
        write_text(&mut buf, &m, &meta).unwrap();
        let (back, meta2) = read_text(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(meta2, meta);
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let m = sample();
        let mut buf = Vec::new();
        write_binary(&mut buf, &m, &[("fft_size".into(), "64".into())]).unwrap();
        let (back, meta) = read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.hash_hex(), m.hash_hex());
        assert_eq!(meta[0].1, "64");
    }

    #[test]
    fn negative_radius_is_rejected_on_load() {
        let text = "ballmatrix v1 1 1\n1 0 -1\n";
        assert!(read_text(text.as_bytes()).is_err());
        assert!(read_text("ballmatrix v2 1 1\n".as_bytes()).is_err());
    }
}
