//! On-disk form of operators and vectors.
//!
//! Both formats carry a grid header (dimension and cutoff) followed by the
//! entries in row-major order. The binary layout is little-endian:
//!
//! ```text
//! magic   4 bytes   "TDOP" (operator) or "TDVC" (vector)
//! version u32       1
//! dim     u32
//! cutoff  i64
//! count   u64       number of complex entries
//! entries count * (re f64, im f64)
//! ```
//!
//! The JSON form is `{"kind", "version", "dim", "cutoff", "entries": [[re, im], ...]}`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DenseOperator, FourierVector, TruncatedGrid};
use crate::error::{Error, Result};

const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Binary,
    Json,
}

#[derive(Serialize, Deserialize)]
struct JsonForm {
    kind: String,
    version: u32,
    dim: usize,
    cutoff: i64,
    entries: Vec<[f64; 2]>,
}

fn write_payload(
    out: &mut impl Write,
    format: Format,
    kind: &str,
    grid: &TruncatedGrid,
    entries: impl Iterator<Item = Complex64>,
) -> Result<()> {
    match format {
        Format::Json => {
            let form = JsonForm {
                kind: kind.to_string(),
                version: VERSION,
                dim: grid.dim(),
                cutoff: grid.cutoff(),
                entries: entries.map(|z| [z.re, z.im]).collect(),
            };
            serde_json::to_writer(&mut *out, &form)?;
        }
        Format::Binary => {
            let entries: Vec<Complex64> = entries.collect();
            let magic: &[u8; 4] = if kind == "operator" { b"TDOP" } else { b"TDVC" };
            out.write_all(magic)?;
            out.write_all(&VERSION.to_le_bytes())?;
            out.write_all(&(grid.dim() as u32).to_le_bytes())?;
            out.write_all(&grid.cutoff().to_le_bytes())?;
            out.write_all(&(entries.len() as u64).to_le_bytes())?;
            for z in entries {
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_payload(input: &mut impl Read, format: Format, kind: &str) -> Result<(TruncatedGrid, Vec<Complex64>)> {
    match format {
        Format::Json => {
            let form: JsonForm = serde_json::from_reader(input)?;
            if form.kind != kind || form.version != VERSION {
                return Err(Error::Serde(format!(
                    "expected {kind} version {VERSION}, found {} version {}",
                    form.kind, form.version
                )));
            }
            let grid = TruncatedGrid::new(form.dim, form.cutoff)?;
            Ok((grid, form.entries.into_iter().map(|[a, b]| Complex64::new(a, b)).collect()))
        }
        Format::Binary => {
            let mut buf = Vec::new();
            input.read_to_end(&mut buf)?;
            let expect: &[u8; 4] = if kind == "operator" { b"TDOP" } else { b"TDVC" };
            if buf.len() < 28 || &buf[0..4] != expect {
                return Err(Error::Serde(format!("not a binary {kind} file")));
            }
            let u32_at = |p: usize| u32::from_le_bytes(buf[p..p + 4].try_into().unwrap());
            let u64_at = |p: usize| u64::from_le_bytes(buf[p..p + 8].try_into().unwrap());
            if u32_at(4) != VERSION {
                return Err(Error::Serde(format!("unsupported version {}", u32_at(4))));
            }
            let grid = TruncatedGrid::new(u32_at(8) as usize, u64_at(12) as i64)?;
            let count = u64_at(20) as usize;
            if buf.len() != 28 + 16 * count {
                return Err(Error::Serde("truncated binary payload".into()));
            }
            let entries = (0..count)
                .map(|i| {
                    let p = 28 + 16 * i;
                    Complex64::new(
                        f64::from_le_bytes(buf[p..p + 8].try_into().unwrap()),
                        f64::from_le_bytes(buf[p + 8..p + 16].try_into().unwrap()),
                    )
                })
                .collect();
            Ok((grid, entries))
        }
    }
}

pub fn write_operator(out: &mut impl Write, op: &DenseOperator, format: Format) -> Result<()> {
    let n = op.dim();
    let m = op.to_matrix();
    let entries = (0..n).flat_map(move |i| (0..n).map(move |j| (i, j)));
    write_payload(out, format, "operator", op.grid(), entries.map(|(i, j)| m[(i, j)]))
}

pub fn read_operator(input: &mut impl Read, format: Format) -> Result<DenseOperator> {
    let (grid, entries) = read_payload(input, format, "operator")?;
    let n = grid.len();
    if entries.len() != n * n {
        return Err(Error::Serde(format!("{} entries for a {n}x{n} operator", entries.len())));
    }
    DenseOperator::from_matrix(&grid, DMatrix::from_row_slice(n, n, &entries))
}

pub fn write_vector(out: &mut impl Write, f: &FourierVector, format: Format) -> Result<()> {
    write_payload(out, format, "vector", f.grid(), f.coeffs().iter().copied())
}

pub fn read_vector(input: &mut impl Read, format: Format) -> Result<FourierVector> {
    let (grid, entries) = read_payload(input, format, "vector")?;
    FourierVector::from_coeffs(&grid, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_both_formats() {
        let g = TruncatedGrid::new(2, 1).unwrap();
        let m = DMatrix::from_fn(8, 8, |i, j| Complex64::new(i as f64 * 0.1, -(j as f64) / 3.0));
        let op = DenseOperator::from_matrix(&g, m).unwrap();
        let f = FourierVector::from_coeffs(&g, (0..8).map(|i| Complex64::new(i as f64, 1.0)).collect()).unwrap();
        for fmt in [Format::Binary, Format::Json] {
            let mut buf = Vec::new();
            write_operator(&mut buf, &op, fmt).unwrap();
            assert_eq!(read_operator(&mut buf.as_slice(), fmt).unwrap(), op);
            let mut buf = Vec::new();
            write_vector(&mut buf, &f, fmt).unwrap();
            assert_eq!(read_vector(&mut buf.as_slice(), fmt).unwrap(), f);
        }
        assert!(read_vector(&mut &b"TDOPxxxx"[..], Format::Binary).is_err());
    }
}
