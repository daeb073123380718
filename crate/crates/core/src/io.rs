//! Interchange formats for densities and spectra.
//!
//! Binary container, little-endian throughout:
//!
//! ```text
//! b"APSL" | version: u32 | d: u32 | N: u32 | payload
//! ```
//!
//! The payload holds `N^d` f64 values (a density) or `N^d` pairs of f64
//! `(re, im)` (a spectrum); the reader tells them apart by length.
//! CSV files carry one row per grid point: index columns, then value columns.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{ApError, Result};
use crate::group_fourier::{centered_coords, coords_of, GridDensity, Spectrum};

pub const MAGIC: &[u8; 4] = b"APSL";
pub const VERSION: u32 = 1;

fn header(d: usize, n: usize) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out
}

pub fn density_to_bytes(f: &GridDensity) -> Vec<u8> {
    let mut out = header(f.d(), f.n());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn spectrum_to_bytes(s: &Spectrum) -> Vec<u8> {
    let mut out = header(s.d(), s.n());
    for c in s.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

/// Decoded container contents.
#[derive(Debug, Clone, PartialEq)]
pub enum Container {
    Density(GridDensity),
    Spectrum(Spectrum),
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

pub fn from_bytes(bytes: &[u8]) -> Result<Container> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(ApError::Format("missing APSL magic".into()));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(ApError::Format(format!("unsupported version {version}")));
    }
    let d = u32_at(bytes, 8) as usize;
    let n = u32_at(bytes, 12) as usize;
    let points = (n as u64)
        .checked_pow(d as u32)
        .ok_or_else(|| ApError::Format("N^d overflows".into()))? as usize;
    let payload = &bytes[16..];
    if payload.len() == points * 8 {
        let values = (0..points).map(|i| f64_at(payload, 8 * i)).collect();
        Ok(Container::Density(GridDensity::new(d, n, values)?))
    } else if payload.len() == points * 16 {
        let coeffs = (0..points)
            .map(|i| Complex64::new(f64_at(payload, 16 * i), f64_at(payload, 16 * i + 8)))
            .collect();
        Ok(Container::Spectrum(Spectrum::new(d, n, coeffs)?))
    } else {
        Err(ApError::Format(format!(
            "payload of {} bytes fits neither {points} reals nor {points} complex values",
            payload.len()
        )))
    }
}

fn index_header(d: usize, prefix: &str) -> String {
    (0..d).map(|k| format!("{prefix}{k}")).collect::<Vec<_>>().join(",")
}

/// CSV with columns `x0[,x1,…],value`.
pub fn density_to_csv(f: &GridDensity) -> String {
    let mut out = format!("{},value\n", index_header(f.d(), "x"));
    for (i, v) in f.values().iter().enumerate() {
        let idx: Vec<String> = coords_of(f.d(), f.n(), i).iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{},{v:e}", idx.join(","));
    }
    out
}

/// CSV with columns `xi0[,xi1,…],re,im`, centered frequencies.
pub fn spectrum_to_csv(s: &Spectrum) -> String {
    let mut out = format!("{},re,im\n", index_header(s.d(), "xi"));
    for (i, c) in s.coeffs().iter().enumerate() {
        let idx: Vec<String> = centered_coords(s.d(), s.n(), i).iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{},{:e},{:e}", idx.join(","), c.re, c.im);
    }
    out
}

/// Parse the output of [`density_to_csv`]; `n` is the side length.
pub fn density_from_csv(text: &str, n: usize) -> Result<GridDensity> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| ApError::Format("empty CSV".into()))?;
    let d = head.split(',').count() - 1;
    if d == 0 {
        return Err(ApError::Format("CSV has no index columns".into()));
    }
    let len = n.pow(d as u32);
    let mut values = vec![0.0; len];
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != d + 1 {
            return Err(ApError::Format(format!("line {}: expected {} columns", lineno + 2, d + 1)));
        }
        let mut idx = 0usize;
        for c in &cols[..d] {
            let k: usize = c
                .trim()
                .parse()
                .map_err(|_| ApError::Format(format!("line {}: bad index `{c}`", lineno + 2)))?;
            if k >= n {
                return Err(ApError::Format(format!("line {}: index {k} >= N", lineno + 2)));
            }
            idx = idx * n + k;
        }
        values[idx] = cols[d]
            .trim()
            .parse()
            .map_err(|_| ApError::Format(format!("line {}: bad value", lineno + 2)))?;
        seen += 1;
    }
    if seen != len {
        return Err(ApError::Format(format!("expected {len} rows, found {seen}")));
    }
    GridDensity::new(d, n, values)
}
