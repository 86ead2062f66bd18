//! Reading spectra back: this crate's own exports and generic
//! frequency/complex CSV files from network analysers.

use std::path::{Path, PathBuf};

use magpol::quantum_io::ComplexSpectrum;
use magpol::{Drive, Spectrum, System};
use num_complex::Complex;
use thiserror::Error;

use crate::config::InputFormat;
use crate::export::{SpectraFile, MAGIC};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("column `{column}`: {message}")]
    Unit { column: String, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse { line, message: message.into() }
}

/// One frequency-sorted spectrum. `label` is the outer sweep coordinate
/// for map exports and the block index for generic files.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredSpectrum {
    pub label: f64,
    /// Angular frequency, rad/s.
    pub omega: Vec<f64>,
    pub s11: Vec<Complex<f64>>,
    /// |S11| exactly as stored, when the file holds magnitudes.
    pub magnitude: Vec<f64>,
}

impl MeasuredSpectrum {
    fn from_parts(label: f64, mut samples: Vec<(f64, Complex<f64>, f64)>) -> Self {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let omega = samples.iter().map(|s| s.0).collect();
        let s11 = samples.iter().map(|s| s.1).collect();
        let magnitude = samples.iter().map(|s| s.2).collect();
        Self { label, omega, s11, magnitude }
    }

    /// Attaches the model context the file does not carry.
    pub fn into_spectrum(self, system: &System, drive: &Drive) -> Spectrum {
        ComplexSpectrum { freq_grid: self.omega, s11: self.s11, drive: *drive, system: *system }
    }
}

/// Parses a file written by [`SpectraFile::render`].
pub fn parse_spectra_file(text: &str) -> Result<SpectraFile, IngestError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == MAGIC => {}
        _ => return Err(parse_err(1, format!("missing `{MAGIC}` header"))),
    }
    let mut meta = Vec::new();
    let mut columns = None;
    let mut rows = Vec::new();
    for (n, line) in lines {
        if columns.is_none() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once(": ").ok_or_else(|| parse_err(n, "header line is not `# key: value`"))?;
                meta.push((k.to_string(), v.to_string()));
            } else {
                columns = Some(line.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let width = columns.as_ref().map_or(0, Vec::len);
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| parse_err(n, format!("`{s}`: {e}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != width {
            return Err(parse_err(n, format!("expected {width} fields, found {}", row.len())));
        }
        rows.push(row);
    }
    let columns = columns.ok_or_else(|| parse_err(1, "no column header"))?;
    Ok(SpectraFile { meta, columns, rows })
}

pub fn ingest_spectra(path: &Path, format: InputFormat) -> Result<Vec<MeasuredSpectrum>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    ingest_str(&text, format)
}

pub fn ingest_str(text: &str, format: InputFormat) -> Result<Vec<MeasuredSpectrum>, IngestError> {
    let own = text.lines().next().is_some_and(|l| l.trim_end() == MAGIC);
    match format {
        InputFormat::Magpol => from_own(text),
        InputFormat::Generic => from_generic(text),
        InputFormat::Auto if own => from_own(text),
        InputFormat::Auto => from_generic(text),
    }
}

fn from_own(text: &str) -> Result<Vec<MeasuredSpectrum>, IngestError> {
    let file = parse_spectra_file(text)?;
    let freq = file.column("freq_Hz").ok_or_else(|| IngestError::Unit {
        column: file.columns.join(","),
        message: "no `freq_Hz` column, file holds no spectra".into(),
    })?;
    let mag = file.column("mag").ok_or_else(|| parse_err(2, "no `mag` column"))?;
    let phase = file.column("phase_rad");
    // Single-spectrum files carry the frequency in the first column.
    let label = if freq == 0 { None } else { Some(0) };
    let mut out: Vec<MeasuredSpectrum> = Vec::new();
    let mut current: Vec<(f64, Complex<f64>, f64)> = Vec::new();
    let mut current_label = f64::NAN;
    for row in &file.rows {
        let l = label.map_or(0.0, |c| row[c]);
        if !current.is_empty() && l.to_bits() != current_label.to_bits() {
            out.push(MeasuredSpectrum::from_parts(current_label, std::mem::take(&mut current)));
        }
        current_label = l;
        let m = row[mag];
        let z = Complex::from_polar(m, phase.map_or(0.0, |p| row[p]));
        current.push((std::f64::consts::TAU * row[freq], z, m));
    }
    if !current.is_empty() {
        out.push(MeasuredSpectrum::from_parts(current_label, current));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Values {
    ReIm,
    Polar { db: bool, degrees: bool },
}

/// Multiplier to rad/s for a frequency column name.
fn frequency_unit(name: &str) -> Result<f64, IngestError> {
    let n = name.to_ascii_lowercase();
    let unit_err = |message: &str| IngestError::Unit { column: name.to_string(), message: message.into() };
    if n.contains("rad/s") {
        return Ok(1.0);
    }
    let prefixed: Vec<(&str, f64)> = [("ghz", 1e9), ("mhz", 1e6), ("khz", 1e3)]
        .into_iter()
        .filter(|(u, _)| n.contains(u))
        .collect();
    let scale = match prefixed.as_slice() {
        [(_, s)] => *s,
        [] if n.contains("hz") => 1.0,
        [] => return Err(unit_err("frequency unit missing (Hz, kHz, MHz, GHz or rad/s)")),
        _ => return Err(unit_err("frequency unit is ambiguous")),
    };
    Ok(std::f64::consts::TAU * scale)
}

fn value_columns(a: &str, b: &str) -> Result<Values, IngestError> {
    let (la, lb) = (a.to_ascii_lowercase(), b.to_ascii_lowercase());
    if la.starts_with("re") && lb.starts_with("im") {
        return Ok(Values::ReIm);
    }
    if la.contains("mag") || la.starts_with("abs") || la.starts_with('|') {
        let db = la.contains("db");
        let degrees = if lb.contains("deg") {
            true
        } else if lb.contains("rad") {
            false
        } else {
            return Err(IngestError::Unit { column: b.to_string(), message: "phase unit missing (deg or rad)".into() });
        };
        return Ok(Values::Polar { db, degrees });
    }
    Err(IngestError::Unit { column: format!("{a},{b}"), message: "expected re,im or mag,phase columns".into() })
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else if line.contains(';') {
        line.split(';').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Three columns: frequency with a unit in its name, then `re,im` or
/// `mag,phase`. Lines starting with `#` or `!` are comments; blank lines
/// separate spectra.
fn from_generic(text: &str) -> Result<Vec<MeasuredSpectrum>, IngestError> {
    let mut header: Option<(f64, Values)> = None;
    let mut out = Vec::new();
    let mut current = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let t = line.trim();
        if t.starts_with('#') || t.starts_with('!') {
            continue;
        }
        if t.is_empty() {
            if !current.is_empty() {
                out.push(MeasuredSpectrum::from_parts(out.len() as f64, std::mem::take(&mut current)));
            }
            continue;
        }
        let fields = split_fields(t);
        let Some((scale, values)) = header else {
            if fields.len() != 3 {
                return Err(parse_err(n, format!("header needs 3 columns, found {}", fields.len())));
            }
            header = Some((frequency_unit(fields[0])?, value_columns(fields[1], fields[2])?));
            continue;
        };
        if fields.len() != 3 {
            return Err(parse_err(n, format!("expected 3 fields, found {}", fields.len())));
        }
        let mut v = [0.0; 3];
        for (slot, s) in v.iter_mut().zip(&fields) {
            *slot = s.parse::<f64>().map_err(|e| parse_err(n, format!("`{s}`: {e}")))?;
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(parse_err(n, "non-finite value"));
        }
        let z = match values {
            Values::ReIm => Complex::new(v[1], v[2]),
            Values::Polar { db, degrees } => {
                let mag = if db { 10f64.powf(v[1] / 20.0) } else { v[1] };
                Complex::from_polar(mag, if degrees { v[2].to_radians() } else { v[2] })
            }
        };
        let mag = match values {
            Values::Polar { db: false, .. } => v[1],
            _ => z.norm(),
        };
        current.push((v[0] * scale, z, mag));
    }
    if header.is_none() {
        return Err(parse_err(1, "no header line"));
    }
    if !current.is_empty() {
        out.push(MeasuredSpectrum::from_parts(out.len() as f64, current));
    }
    Ok(out)
}

/// Mean of the per-spectrum values, used to average the cavity
/// parameters over phase settings of an imperfectly degenerate cavity.
pub fn average(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
