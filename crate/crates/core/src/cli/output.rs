//! CSV tables and the JSON report.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const TOOL: &str = "torus-dissipation";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip form; stable across runs.
pub fn float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

pub fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// A flat table with a versioned header comment.
#[derive(Clone, Debug)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, config_hash: &str) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
        let mut out = String::new();
        let _ = writeln!(out, "# {TOOL} {VERSION} config-sha256 {config_hash}");
        out.push_str(&String::from_utf8(body).map_err(|e| Error::Serde(e.to_string()))?);
        Ok(out)
    }

    pub fn write(&self, path: &Path, config_hash: &str) -> Result<()> {
        std::fs::write(path, self.render(config_hash)?)?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serde(e.to_string())
}

/// Fixed-width text table for the terminal.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(|s| s.as_str()).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_quoting() {
        let mut t = Table::new(&["eps", "note"]);
        t.push(vec![float(0.1), "a,b".into()]);
        let s = t.render("abc").unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], format!("# torus-dissipation {VERSION} config-sha256 abc"));
        assert_eq!(lines[1], "eps,note");
        assert_eq!(lines[2], "1e-1,\"a,b\"");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
    }
}
