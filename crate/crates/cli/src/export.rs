//! CSV spectra files with a commented header, and portable greymaps.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

pub const MAGIC: &str = "# magpol-spectra v1";

/// A table of numbers plus the `# key: value` metadata that precedes it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraFile {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// 17 significant digits, which round-trips any f64.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

impl SpectraFile {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { meta: Vec::new(), columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.push((key.into(), value.into()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 8));
        out.push_str(MAGIC);
        out.push('\n');
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for &v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&format_value(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }
}

/// Plain (P2) greymap of a row-major grid, min-max scaled to 0..=255.
/// Non-finite cells are drawn black.
pub fn greymap(rows: usize, cols: usize, values: &[f64], comment: &str) -> String {
    assert_eq!(rows * cols, values.len());
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!("P2\n# {comment}\n{cols} {rows}\n255\n");
    for r in 0..rows {
        let line: Vec<String> = values[r * cols..(r + 1) * cols]
            .iter()
            .map(|&v| {
                let level = if !v.is_finite() {
                    0.0
                } else if span > 0.0 {
                    255.0 * (v - lo) / span
                } else {
                    0.0
                };
                format!("{}", level.round() as u8)
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
