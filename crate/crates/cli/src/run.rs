//! Turns a [`RunConfig`] into output tables.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use magpol::fields::{cavity_energy_analytic, cavity_energy_numeric, sample_energy};
use magpol::fitting::{extract_splitting, find_dips, fit_lorentzian};
use magpol::llg::{cone_phase_sweep, ConeHandedness, SteadyProtocol};
use magpol::params::{field_for_resonance, kittel_frequency};
use magpol::perturbation::{hybrid_eigenfrequencies, rabi_splitting_pert};
use magpol::quantum_io::{field_sweep_map, phase_sweep_map, splitting_map, ComplexSpectrum};
use magpol::scalar::{ghz_to_angular, mhz_to_angular};
use magpol::susceptibility::{chi_circular, chi_tensor, Circular};
use magpol::{Drive, Error as ModelError, System};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, PerturbationScale, RunConfig, SplittingMethod, Sweep};
use crate::export::{format_value, greymap, SpectraFile};
use crate::ingest::{average, ingest_spectra, IngestError};

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("input: {0}")]
    Ingest(#[from] IngestError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: SpectraFile,
    pub greymap: Option<String>,
    pub overlay: Option<SpectraFile>,
    /// Human-readable notes for stderr.
    pub summary: Vec<String>,
}

fn header(cfg: &RunConfig, system: &System, drive: &Drive, columns: &[&str]) -> SpectraFile {
    let resolved = [
        ("fc_Hz", system.cavity.omega_c() / TAU),
        ("kappa_Hz", system.cavity.kappa() / TAU),
        ("eta_Hz", system.magnet.eta_kittel() / TAU),
        ("g_Hz", system.coupling.g() / TAU),
        ("alpha", system.magnet.alpha()),
        ("mu0_H0_T", drive.mu0_h0()),
        ("delta", drive.delta()),
        ("phi_rad", drive.phi()),
    ]
    .iter()
    .map(|(k, v)| format!("{k}={}", format_value(*v)))
    .collect::<Vec<_>>()
    .join(" ");
    SpectraFile::new(columns.iter().copied())
        .with_meta("sweep", cfg.sweep.name())
        .with_meta("sigma", format!("{}", drive.sigma()))
        .with_meta("convention", "exp(+i w t); phi is the port-2 phase lead; sigma = -sign(H0)")
        .with_meta("resolved", resolved)
        .with_meta("config", echo(cfg).to_json())
}

/// The config minus output paths, which do not affect the numbers.
fn echo(cfg: &RunConfig) -> RunConfig {
    let mut c = cfg.clone();
    c.output.csv = None;
    c.output.pgm = None;
    c.output.overlay = None;
    c
}

/// Sample-to-cavity energy ratio, optionally by quadrature.
fn filling(system: &System, drive: &Drive, order: Option<usize>) -> Result<f64, ModelError> {
    let wp = sample_energy(&system.cavity, drive, &system.magnet, system.cavity.centre())?;
    let wc = match order {
        Some(n) => cavity_energy_numeric(&system.cavity, drive, n)?,
        None => match cavity_energy_analytic(&system.cavity, drive) {
            Ok(w) => w,
            Err(ModelError::UnsupportedModePair { .. }) => cavity_energy_numeric(&system.cavity, drive, 64)?,
            Err(e) => return Err(e),
        },
    };
    Ok(wp / wc)
}

/// Multiplier that makes the linear-drive perturbative splitting equal 2g.
fn filling_scale(cfg: &RunConfig, system: &System, drive: &Drive) -> Result<f64, ModelError> {
    match cfg.perturbation {
        PerturbationScale::FirstPrinciples => Ok(1.0),
        PerturbationScale::Calibrated => {
            let linear = Drive::new(0.0, 0.0, drive.bias(), drive.mu0_h0(), 0.0)?;
            let r0 = filling(system, &linear, cfg.quadrature_order)?;
            let two_g = 2.0 * system.coupling.g();
            Ok(two_g * two_g / (2.0 * system.cavity.omega_c() * system.magnet.omega_m()) / r0)
        }
    }
}

fn omega_grid(system: &System, offsets_mhz: &[f64]) -> Vec<f64> {
    let wc = system.cavity.omega_c();
    offsets_mhz.iter().map(|&o| wc + mhz_to_angular(o)).collect()
}

pub fn execute(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let system = cfg.system()?;
    let drive = cfg.drive(&system)?;
    let mut summary = Vec::new();
    let phase = cfg.output.phase;
    let spectral_columns: &[&str] = if phase { &["mag", "phase_rad"] } else { &["mag"] };

    let out = match &cfg.sweep {
        Sweep::FieldSweep { field_offset_mt, freq_offset_mhz } => {
            let h_res = field_for_resonance(&system.magnet, system.cavity.omega_c());
            let fields: Vec<f64> = field_offset_mt.values().iter().map(|o| h_res + o * 1e-3).collect();
            let omegas = omega_grid(&system, &freq_offset_mhz.values());
            let map = field_sweep_map(&system, &drive, &fields, &omegas)?;
            let mut table = header(cfg, &system, &drive, &[&["field_T", "freq_Hz"], spectral_columns].concat());
            push_spectral_rows(&mut table, &map.axis1, &map.axis2, &map.values, phase);
            let mags = map.magnitude();
            let overlay = match &cfg.output.overlay {
                Some(_) => {
                    let scale = filling_scale(cfg, &system, &drive)?;
                    let mut o = header(cfg, &system, &drive, &["field_T", "omega_a_Hz", "omega_b_Hz"]);
                    for &h in &fields {
                        let d = drive.with_field(h)?;
                        let r = filling(&system, &d, cfg.quadrature_order)? * scale;
                        let b = hybrid_eigenfrequencies(system.cavity.omega_c(), kittel_frequency(&system.magnet, &d), &system.magnet, r)?;
                        o.push(vec![h, b.omega_a / TAU, b.omega_b / TAU]);
                    }
                    Some(o)
                }
                None => None,
            };
            summary.push(format!("{} fields x {} frequencies", fields.len(), omegas.len()));
            RunOutput {
                table,
                greymap: Some(greymap(fields.len(), omegas.len(), &mags.values, "|S11|, rows field, columns frequency")),
                overlay,
                summary: Vec::new(),
            }
        }

        Sweep::Spectrum { freq_offset_mhz } => {
            let omegas = omega_grid(&system, &freq_offset_mhz.values());
            let spec = ComplexSpectrum::compute(&system, &drive, &omegas)?;
            let mut table = header(cfg, &system, &drive, &[&["field_T", "freq_Hz"], spectral_columns].concat());
            push_spectral_rows(&mut table, &[drive.mu0_h0()], &omegas, &spec.s11, phase);
            let dips = find_dips(&omegas, &spec.magnitude(), 0.01);
            summary.push(format!("{} dip(s)", dips.len()));
            if let Some(sep) = two_deepest_separation(&dips) {
                summary.push(format!("dip separation {:.4} MHz", sep / TAU * 1e-6));
            }
            RunOutput { table, greymap: None, overlay: None, summary: Vec::new() }
        }

        Sweep::PhaseSweep { phi_deg, freq_offset_mhz } => {
            let degs = phi_deg.values();
            let phis: Vec<f64> = degs.iter().map(|d| d.to_radians()).collect();
            let omegas = omega_grid(&system, &freq_offset_mhz.values());
            let map = phase_sweep_map(&system, drive.delta(), drive.bias(), &phis, &omegas)?;
            let mut table = header(cfg, &system, &drive, &[&["phi_deg", "freq_Hz"], spectral_columns].concat());
            push_spectral_rows(&mut table, &degs, &omegas, &map.values, phase);
            let scaled = map.magnitude().normalised();
            summary.push(format!("{} phases x {} frequencies", degs.len(), omegas.len()));
            RunOutput {
                table,
                greymap: Some(greymap(degs.len(), omegas.len(), &scaled.values, "normalised |S11|, rows phase, columns frequency")),
                overlay: None,
                summary: Vec::new(),
            }
        }

        Sweep::DeltaPhiMap { delta, phi_deg, method } => {
            let deltas = delta.values();
            let degs = phi_deg.values();
            let phis: Vec<f64> = degs.iter().map(|d| d.to_radians()).collect();
            let h = system.resonance_field();
            let values: Vec<f64> = match method {
                SplittingMethod::Coupling => splitting_map(&system, drive.bias(), &deltas, &phis)?.values,
                SplittingMethod::Dips => {
                    let rows: Vec<Vec<f64>> = deltas
                        .par_iter()
                        .map(|&d| {
                            phis.iter()
                                .map(|&p| match extract_splitting(&system, &Drive::new(d, p, drive.bias(), h, 0.0)?) {
                                    Ok(v) => Ok(v),
                                    Err(ModelError::Unresolved { .. }) => Ok(f64::NAN),
                                    Err(e) => Err(e),
                                })
                                .collect::<Result<Vec<f64>, ModelError>>()
                        })
                        .collect::<Result<_, _>>()?;
                    rows.into_iter().flatten().collect()
                }
            };
            let scale = filling_scale(cfg, &system, &drive.with_field(h)?)?;
            let mut table = header(cfg, &system, &drive, &["delta", "phi_deg", "splitting_MHz", "perturbation_splitting_MHz"]);
            for (i, &d) in deltas.iter().enumerate() {
                for (j, &p) in phis.iter().enumerate() {
                    let dr = Drive::new(d, p, drive.bias(), h, 0.0)?;
                    let pert = rabi_splitting_pert(system.cavity.omega_c(), &system.magnet, filling(&system, &dr, cfg.quadrature_order)? * scale)?;
                    table.push(vec![d, degs[j], values[i * phis.len() + j] / TAU * 1e-6, pert / TAU * 1e-6]);
                }
            }
            let (imax, imin) = extrema(&values);
            summary.push(format!(
                "max {:.4} MHz at delta={} phi={} deg; min {:.4} MHz at delta={} phi={} deg",
                values[imax] / TAU * 1e-6,
                deltas[imax / phis.len()],
                degs[imax % phis.len()],
                values[imin] / TAU * 1e-6,
                deltas[imin / phis.len()],
                degs[imin % phis.len()],
            ));
            RunOutput {
                table,
                greymap: Some(greymap(deltas.len(), phis.len(), &values, "splitting, rows delta, columns phi")),
                overlay: None,
                summary: Vec::new(),
            }
        }

        Sweep::LlgCone { phi_deg, h_over_ms, steps_per_period, decay_times, window_periods } => {
            let degs = phi_deg.values();
            let phis: Vec<f64> = degs.iter().map(|d| d.to_radians()).collect();
            let omega = kittel_frequency(&system.magnet, &drive);
            let protocol = SteadyProtocol { steps_per_period: *steps_per_period, decay_times: *decay_times, window_periods: *window_periods };
            let h = h_over_ms * system.magnet.saturation_magnetisation();
            let cones = cone_phase_sweep(&system.magnet, &drive, h, omega, &phis, &protocol)?;
            let mut table = header(
                cfg,
                &system,
                &drive,
                &["phi_deg", "freq_Hz", "cone_angle_rad", "transverse", "ellipticity", "handedness"],
            );
            for (deg, c) in degs.iter().zip(&cones) {
                let hand = match c.handedness {
                    Some(ConeHandedness::WithField) => 1.0,
                    Some(ConeHandedness::AgainstField) => -1.0,
                    None => 0.0,
                };
                table.push(vec![*deg, omega / TAU, c.cone_angle, c.transverse_amplitude(), c.ellipticity, hand]);
            }
            let angles: Vec<f64> = cones.iter().map(|c| c.cone_angle).collect();
            let (imax, imin) = extrema(&angles);
            summary.push(format!("largest cone at phi={} deg, smallest at phi={} deg", degs[imax], degs[imin]));
            RunOutput {
                table,
                greymap: Some(greymap(1, angles.len(), &angles, "cone angle over phi")),
                overlay: None,
                summary: Vec::new(),
            }
        }

        Sweep::Susceptibility { freq_ghz, damped } => {
            let w0 = kittel_frequency(&system.magnet, &drive);
            let mut table = header(
                cfg,
                &system,
                &drive,
                &["freq_Hz", "chi_plus_re", "chi_plus_im", "chi_minus_re", "chi_minus_im", "chi_a_re", "chi_b_re"],
            );
            for f in freq_ghz.values() {
                let w = ghz_to_angular(f);
                let p = chi_circular(&system.magnet, w0, w, Circular::Plus, drive.bias(), *damped)?;
                let m = chi_circular(&system.magnet, w0, w, Circular::Minus, drive.bias(), *damped)?;
                let t = chi_tensor(&system.magnet, w0, w, drive.bias(), *damped)?;
                table.push(vec![f * 1e9, p.re, p.im, m.re, m.im, t.chi_a.re, t.chi_b.re]);
            }
            summary.push(format!("Kittel frequency {:.6} GHz", w0 / TAU * 1e-9));
            RunOutput { table, greymap: None, overlay: None, summary: Vec::new() }
        }

        Sweep::Fit { input, format, average: avg } => {
            let spectra = ingest_spectra(input, *format)?;
            let mut table = header(
                cfg,
                &system,
                &drive,
                &["label", "center_Hz", "hwhm_Hz", "depth", "baseline", "residual", "dip_separation_Hz"],
            );
            let fits = spectra
                .par_iter()
                .map(|s| {
                    let power: Vec<f64> = s.magnitude.iter().map(|m| m * m).collect();
                    let fit = fit_lorentzian(&s.omega, &power, None)?;
                    let sep = two_deepest_separation(&find_dips(&s.omega, &s.magnitude, 0.01)).unwrap_or(f64::NAN);
                    Ok((s.label, fit, sep))
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            for (label, fit, sep) in &fits {
                table.push(vec![*label, fit.center / TAU, fit.hwhm / TAU, fit.depth, fit.baseline, fit.residual_norm, sep / TAU]);
            }
            if *avg {
                let centres: Vec<f64> = fits.iter().map(|f| f.1.center / TAU).collect();
                let widths: Vec<f64> = fits.iter().map(|f| f.1.hwhm / TAU).collect();
                if let (Some(c), Some(w)) = (average(&centres), average(&widths)) {
                    table = table.with_meta("mean_center_Hz", format_value(c)).with_meta("mean_hwhm_Hz", format_value(w));
                    summary.push(format!("mean centre {:.6} GHz, mean hwhm {:.4} MHz", c * 1e-9, w * 1e-6));
                }
            }
            summary.push(format!("{} spectra fitted", fits.len()));
            RunOutput { table, greymap: None, overlay: None, summary: Vec::new() }
        }
    };
    Ok(RunOutput { summary, ..out })
}

fn push_spectral_rows(table: &mut SpectraFile, axis1: &[f64], omegas: &[f64], values: &[num_complex::Complex<f64>], phase: bool) {
    for (i, &a) in axis1.iter().enumerate() {
        for (j, &w) in omegas.iter().enumerate() {
            let z = values[i * omegas.len() + j];
            if phase {
                table.push(vec![a, w / TAU, z.norm(), z.arg()]);
            } else {
                table.push(vec![a, w / TAU, z.norm()]);
            }
        }
    }
}

fn two_deepest_separation(dips: &[magpol::fitting::Dip<f64>]) -> Option<f64> {
    if dips.len() < 2 {
        return None;
    }
    let mut d = dips.to_vec();
    d.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)));
    Some((d[0].frequency - d[1].frequency).abs())
}

/// Indices of the first maximum and first minimum among finite values.
fn extrema(v: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (i, &x) in v.iter().enumerate() {
        if x.is_finite() && (!v[imax].is_finite() || x > v[imax]) {
            imax = i;
        }
        if x.is_finite() && (!v[imin].is_finite() || x < v[imin]) {
            imin = i;
        }
    }
    (imax, imin)
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Writes the table to `output.csv` (or stdout) and the optional extras.
pub fn write_outputs(cfg: &RunConfig, out: &RunOutput) -> Result<(), RunError> {
    let text = out.table.render();
    match &cfg.output.csv {
        Some(p) => write_file(p, &text)?,
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| RunError::Io { path: PathBuf::from("<stdout>"), source })?,
    }
    if let (Some(p), Some(g)) = (&cfg.output.pgm, &out.greymap) {
        write_file(p, g)?;
    }
    if let (Some(p), Some(o)) = (&cfg.output.overlay, &out.overlay) {
        write_file(p, &o.render())?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let out = execute(cfg)?;
    write_outputs(cfg, &out)?;
    Ok(out)
}

