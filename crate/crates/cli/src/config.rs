//! Versioned JSON run configuration.

use std::path::{Path, PathBuf};

use magpol::params::{field_for_resonance, ModeIndex};
use magpol::scalar::{ghz_to_angular, mhz_to_angular};
use magpol::{Bias, Cavity, Coupling, Drive, Magnet, System};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("`{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    Paper,
}

/// Material overrides, lab units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnetSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0_ms_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_ghz_per_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_per_m3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diameter_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Kittel-mode HWHM η/2π.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_mhz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_mm: Option<f64>,
    /// ω_c/2π; defaults to the empty-box resonance of the first mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fc_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<[[u32; 2]; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_overlap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BiasSpec {
    #[serde(rename = "+z")]
    PlusZ,
    #[serde(rename = "-z")]
    MinusZ,
}

impl From<BiasSpec> for Bias {
    fn from(b: BiasSpec) -> Self {
        match b {
            BiasSpec::PlusZ => Bias::PlusZ,
            BiasSpec::MinusZ => Bias::MinusZ,
        }
    }
}

impl std::str::FromStr for BiasSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "+z" | "z" | "plus" => Ok(BiasSpec::PlusZ),
            "-z" | "minus" => Ok(BiasSpec::MinusZ),
            _ => Err(format!("bias must be +z or -z, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub phi_deg: f64,
    #[serde(default = "default_bias")]
    pub bias: BiasSpec,
    /// μ₀H₀; defaults to the field that tunes the Kittel mode onto the cavity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0_h0_t: Option<f64>,
    #[serde(default)]
    pub probe_power_w: f64,
}

fn default_bias() -> BiasSpec {
    BiasSpec::PlusZ
}

impl Default for DriveSpec {
    fn default() -> Self {
        Self { delta: 0.0, phi_deg: 0.0, bias: BiasSpec::PlusZ, mu0_h0_t: None, probe_power_w: 0.0 }
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Range {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points }
    }

    pub fn validate(&self, field: &str) -> Result<(), ConfigError> {
        if self.points == 0 {
            return Err(ConfigError::invalid(field, "empty range"));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(ConfigError::invalid(field, "range bounds must be finite"));
        }
        if self.points == 1 && self.start != self.stop {
            return Err(ConfigError::invalid(field, "a single point needs start == stop"));
        }
        if self.points > 1 && self.start == self.stop {
            return Err(ConfigError::invalid(field, "range is not monotone"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let last = (self.points - 1) as f64;
        (0..self.points).map(|k| self.start + span * (k as f64 / last)).collect()
    }
}

impl std::str::FromStr for Range {
    type Err = String;

    /// `start:stop:points`.
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:points, got `{s}`"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
        let points = parts[2].trim().parse::<usize>().map_err(|e| format!("`{}`: {e}", parts[2]))?;
        Ok(Range::new(num(parts[0])?, num(parts[1])?, points))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplittingMethod {
    /// 2|g̃| from the closed-form coupling.
    #[default]
    Coupling,
    /// Separation of the two deepest simulated |S11| dips.
    Dips,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    #[default]
    Auto,
    Magpol,
    Generic,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(InputFormat::Auto),
            "magpol" => Ok(InputFormat::Magpol),
            "generic" => Ok(InputFormat::Generic),
            _ => Err(format!("format must be auto, magpol or generic, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sweep {
    /// |S11| over bias field and frequency.
    FieldSweep { field_offset_mt: Range, freq_offset_mhz: Range },
    /// One spectrum at the drive's bias field.
    Spectrum { freq_offset_mhz: Range },
    /// |S11| over drive phase and frequency, Kittel mode on the cavity.
    PhaseSweep { phi_deg: Range, freq_offset_mhz: Range },
    /// Resonant splitting over (δ, φ).
    DeltaPhiMap {
        delta: Range,
        phi_deg: Range,
        #[serde(default)]
        method: SplittingMethod,
    },
    /// Steady precession cones over drive phase.
    LlgCone {
        phi_deg: Range,
        h_over_ms: f64,
        #[serde(default = "default_steps")]
        steps_per_period: usize,
        #[serde(default = "default_decay_times")]
        decay_times: f64,
        #[serde(default = "default_window")]
        window_periods: usize,
    },
    /// Circular susceptibilities over frequency at the drive's bias field.
    Susceptibility {
        freq_ghz: Range,
        #[serde(default)]
        damped: bool,
    },
    /// Lorentzian fit of each spectrum in a file.
    Fit {
        input: PathBuf,
        #[serde(default)]
        format: InputFormat,
        /// Report the mean centre and width over all spectra as well.
        #[serde(default)]
        average: bool,
    },
}

fn default_steps() -> usize {
    64
}

fn default_decay_times() -> f64 {
    8.0
}

fn default_window() -> usize {
    20
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::FieldSweep { .. } => "field-sweep",
            Sweep::Spectrum { .. } => "spectrum",
            Sweep::PhaseSweep { .. } => "phase-sweep",
            Sweep::DeltaPhiMap { .. } => "delta-phi-map",
            Sweep::LlgCone { .. } => "llg-cone",
            Sweep::Susceptibility { .. } => "susceptibility",
            Sweep::Fit { .. } => "fit",
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let ranges: Vec<(&str, &Range)> = match self {
            Sweep::FieldSweep { field_offset_mt, freq_offset_mhz } => {
                vec![("sweep.field_offset_mt", field_offset_mt), ("sweep.freq_offset_mhz", freq_offset_mhz)]
            }
            Sweep::Spectrum { freq_offset_mhz } => vec![("sweep.freq_offset_mhz", freq_offset_mhz)],
            Sweep::PhaseSweep { phi_deg, freq_offset_mhz } => {
                vec![("sweep.phi_deg", phi_deg), ("sweep.freq_offset_mhz", freq_offset_mhz)]
            }
            Sweep::DeltaPhiMap { delta, phi_deg, .. } => vec![("sweep.delta", delta), ("sweep.phi_deg", phi_deg)],
            Sweep::LlgCone { phi_deg, h_over_ms, .. } => {
                if !(*h_over_ms > 0.0 && h_over_ms.is_finite()) {
                    return Err(ConfigError::invalid("sweep.h_over_ms", "must be positive"));
                }
                vec![("sweep.phi_deg", phi_deg)]
            }
            Sweep::Susceptibility { freq_ghz, .. } => vec![("sweep.freq_ghz", freq_ghz)],
            Sweep::Fit { .. } => vec![],
        };
        for (name, r) in ranges {
            r.validate(name)?;
        }
        if let Sweep::DeltaPhiMap { delta, .. } = self {
            if delta.values().iter().any(|d| !(0.0..=1.0).contains(d)) {
                return Err(ConfigError::invalid("sweep.delta", "δ must lie in [0, 1]"));
            }
        }
        if let Sweep::Susceptibility { freq_ghz, .. } = self {
            if freq_ghz.start < 0.0 || freq_ghz.stop < 0.0 {
                return Err(ConfigError::invalid("sweep.freq_ghz", "frequencies must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pgm: Option<PathBuf>,
    /// Perturbation-theory branches for field sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay: Option<PathBuf>,
    /// Omit the phase column when false.
    #[serde(default = "yes")]
    pub phase: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { csv: None, pgm: None, overlay: None, phase: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "is_default")]
    pub magnet: MagnetSpec,
    #[serde(default, skip_serializing_if = "is_default")]
    pub cavity: CavitySpec,
    #[serde(default, skip_serializing_if = "is_default")]
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub drive: DriveSpec,
    pub sweep: Sweep,
    #[serde(default)]
    pub output: OutputSpec,
    /// Gauss-Legendre order for the cavity energy; closed form when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_order: Option<usize>,
    #[serde(default)]
    pub perturbation: PerturbationScale,
}

/// How perturbation-theory overlays fix the filling ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationScale {
    /// Rescaled so the linear-drive resonant splitting equals 2g.
    #[default]
    Calibrated,
    /// Sample and cavity energies as computed, no free parameter.
    FirstPrinciples,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

impl RunConfig {
    pub fn new(sweep: Sweep) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            preset: Preset::Paper,
            magnet: MagnetSpec::default(),
            cavity: CavitySpec::default(),
            coupling: CouplingSpec::default(),
            drive: DriveSpec::default(),
            sweep,
            output: OutputSpec::default(),
            quadrature_order: None,
            perturbation: PerturbationScale::Calibrated,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    /// Single-line JSON, embedded in output headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let d = &self.drive;
        if !(0.0..=1.0).contains(&d.delta) {
            return Err(ConfigError::invalid("drive.delta", "δ must lie in [0, 1]"));
        }
        if !d.phi_deg.is_finite() {
            return Err(ConfigError::invalid("drive.phi_deg", "not finite"));
        }
        if let Some(order) = self.quadrature_order {
            if order < 2 {
                return Err(ConfigError::invalid("quadrature_order", "must be at least 2"));
            }
        }
        self.sweep.validate()?;
        self.system()?;
        Ok(())
    }

    pub fn system(&self) -> Result<System, ConfigError> {
        let base = match self.preset {
            Preset::Paper => System::paper_preset(),
        };
        let core = |field: &str, e: magpol::Error| ConfigError::invalid(field, e.to_string());

        let m = &self.magnet;
        let bm = base.magnet;
        let magnet = if *m == MagnetSpec::default() {
            bm
        } else {
            let gamma = m.gamma_ghz_per_t.unwrap_or(bm.gamma());
            let eta = m.eta_mhz.map(mhz_to_angular).unwrap_or(bm.eta_kittel());
            Magnet::new(
                m.mu0_ms_t.unwrap_or(bm.mu0_ms()),
                gamma,
                m.rho_per_m3.unwrap_or(bm.rho()),
                m.diameter_mm.map(|d| d * 1e-3).unwrap_or(bm.sample_diameter()),
                m.alpha.unwrap_or(bm.alpha()),
                eta,
            )
            .map_err(|e| core("magnet", e))?
        };

        let c = &self.cavity;
        let bc = base.cavity;
        let cavity = if *c == CavitySpec::default() {
            bc
        } else {
            let a = c.a_mm.map(|v| v * 1e-3).unwrap_or(bc.a());
            let b = c.b_mm.map(|v| v * 1e-3).unwrap_or(bc.b());
            let modes = c
                .modes
                .map(|[p, q]| [ModeIndex::new(p[0], p[1]), ModeIndex::new(q[0], q[1])])
                .unwrap_or(bc.modes());
            let omega_c = c.fc_ghz.map(ghz_to_angular).unwrap_or_else(|| magpol::params::te_resonance(a, b, modes[0]));
            Cavity::new(a, b, c.c_mm.map(|v| v * 1e-3).unwrap_or(bc.c()), omega_c, c.kappa_mhz.map(mhz_to_angular).unwrap_or(bc.kappa()), modes)
                .map_err(|e| core("cavity", e))?
        };

        let k = &self.coupling;
        let bk = base.coupling;
        let coupling = if *k == CouplingSpec::default() {
            bk
        } else {
            Coupling::new(k.g_mhz.map(mhz_to_angular).unwrap_or(bk.g()), k.eta_overlap.unwrap_or(bk.eta_overlap()))
                .map_err(|e| core("coupling", e))?
        };

        System::new(magnet, cavity, coupling).map_err(|e| core("system", e))
    }

    pub fn drive(&self, system: &System) -> Result<Drive, ConfigError> {
        let d = &self.drive;
        let h = d.mu0_h0_t.unwrap_or_else(|| field_for_resonance(&system.magnet, system.cavity.omega_c()));
        Drive::new(d.delta, d.phi_deg.to_radians(), d.bias.into(), h, d.probe_power_w)
            .map_err(|e| ConfigError::invalid("drive", e.to_string()))
    }
}
