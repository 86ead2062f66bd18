use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magpol_cli::config::{BiasSpec, ConfigError, InputFormat, PerturbationScale, Range, RunConfig, SplittingMethod, Sweep};
use magpol_cli::export::SpectraFile;
use magpol_cli::ingest::ingest_spectra;
use magpol_cli::RunError;

/// Cavity magnon-polariton simulator: spectra, maps, precession cones and fits.
#[derive(Parser, Debug)]
#[command(name = "magpol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every simulation; they override the config file.
#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run configuration (schema version 1)
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path, stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// greymap (PGM) quick-look output path
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// amplitude ratio δ of the two ports, 0..=1
    #[arg(long)]
    delta: Option<f64>,
    /// relative phase φ of port 2, degrees
    #[arg(long, allow_hyphen_values = true)]
    phi_deg: Option<f64>,
    /// bias direction, +z or -z
    #[arg(long, allow_hyphen_values = true)]
    bias: Option<BiasSpec>,
    /// bias induction μ₀H₀ in tesla (default: tuned onto the cavity)
    #[arg(long)]
    field_t: Option<f64>,
    #[arg(long)]
    g_mhz: Option<f64>,
    #[arg(long)]
    kappa_mhz: Option<f64>,
    #[arg(long)]
    eta_mhz: Option<f64>,
    #[arg(long)]
    fc_ghz: Option<f64>,
    /// drop the phase column
    #[arg(long)]
    no_phase: bool,
    /// cavity energy by Gauss-Legendre quadrature of this order
    #[arg(long)]
    quadrature_order: Option<usize>,
    /// perturbation overlays without calibration to g
    #[arg(long)]
    first_principles: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a JSON configuration as is
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// |S11| over bias field and frequency
    SweepField {
        #[command(flatten)]
        common: Common,
        /// offset from the resonance field, mT, as start:stop:points
        #[arg(long, allow_hyphen_values = true)]
        field_offset_mt: Option<Range>,
        /// offset from the cavity frequency, MHz, as start:stop:points
        #[arg(long, allow_hyphen_values = true)]
        freq_offset_mhz: Option<Range>,
        /// perturbation-theory branch output path
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// One |S11| spectrum at the drive's bias field
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        freq_offset_mhz: Option<Range>,
    },
    /// |S11| over drive phase and frequency at ω₀ = ω_c
    SweepPhase {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        phi_deg_range: Option<Range>,
        #[arg(long, allow_hyphen_values = true)]
        freq_offset_mhz: Option<Range>,
    },
    /// Resonant splitting over (δ, φ)
    MapDeltaPhi {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delta_range: Option<Range>,
        #[arg(long, allow_hyphen_values = true)]
        phi_deg_range: Option<Range>,
        /// measure the splitting from simulated dips instead of 2|g̃|
        #[arg(long)]
        dips: bool,
    },
    /// Steady LLG precession cones over drive phase
    LlgCone {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        phi_deg_range: Option<Range>,
        /// drive amplitude as a fraction of M_s
        #[arg(long)]
        h_over_ms: Option<f64>,
    },
    /// Circular and tensor susceptibilities over frequency
    Susceptibility {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        freq_ghz: Option<Range>,
        #[arg(long)]
        damped: bool,
    },
    /// Lorentzian fit of every spectrum in a file
    Fit {
        input: PathBuf,
        #[arg(long, default_value = "auto")]
        format: InputFormat,
        /// also report the mean centre and width
        #[arg(long)]
        average: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Read spectra, print a summary, optionally re-export
    Ingest {
        input: PathBuf,
        #[arg(long, default_value = "auto")]
        format: InputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn base(common: &Common, default: Sweep, delta: f64) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            if cfg.sweep.name() != default.name() {
                return Err(ConfigError::invalid(
                    "sweep.kind",
                    format!("config holds `{}`, this subcommand runs `{}`", cfg.sweep.name(), default.name()),
                ));
            }
            cfg
        }
        None => {
            let mut cfg = RunConfig::new(default);
            cfg.drive.delta = delta;
            cfg
        }
    };
    if let Some(v) = &common.out {
        cfg.output.csv = Some(v.clone());
    }
    if let Some(v) = &common.pgm {
        cfg.output.pgm = Some(v.clone());
    }
    if let Some(v) = common.delta {
        cfg.drive.delta = v;
    }
    if let Some(v) = common.phi_deg {
        cfg.drive.phi_deg = v;
    }
    if let Some(v) = common.bias {
        cfg.drive.bias = v;
    }
    if let Some(v) = common.field_t {
        cfg.drive.mu0_h0_t = Some(v);
    }
    if let Some(v) = common.g_mhz {
        cfg.coupling.g_mhz = Some(v);
    }
    if let Some(v) = common.kappa_mhz {
        cfg.cavity.kappa_mhz = Some(v);
    }
    if let Some(v) = common.eta_mhz {
        cfg.magnet.eta_mhz = Some(v);
    }
    if let Some(v) = common.fc_ghz {
        cfg.cavity.fc_ghz = Some(v);
    }
    if common.no_phase {
        cfg.output.phase = false;
    }
    if common.quadrature_order.is_some() {
        cfg.quadrature_order = common.quadrature_order;
    }
    if common.first_principles {
        cfg.perturbation = PerturbationScale::FirstPrinciples;
    }
    Ok(cfg)
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn phi_full(points: usize) -> Range {
    Range::new(-180.0, 180.0, points)
}

fn build(command: Command) -> Result<Option<RunConfig>, RunError> {
    let cfg = match command {
        Command::Run { config, out, pgm } => {
            let mut cfg = RunConfig::load(&config)?;
            if out.is_some() {
                cfg.output.csv = out;
            }
            if pgm.is_some() {
                cfg.output.pgm = pgm;
            }
            cfg
        }
        Command::SweepField { common, field_offset_mt, freq_offset_mhz, overlay } => {
            let default = Sweep::FieldSweep { field_offset_mt: Range::new(-1.0, 1.0, 101), freq_offset_mhz: Range::new(-30.0, 30.0, 301) };
            let mut cfg = base(&common, default, 1.0)?;
            if let Sweep::FieldSweep { field_offset_mt: f, freq_offset_mhz: w } = &mut cfg.sweep {
                set(f, field_offset_mt);
                set(w, freq_offset_mhz);
            }
            if overlay.is_some() {
                cfg.output.overlay = overlay;
            }
            cfg
        }
        Command::Spectrum { common, freq_offset_mhz } => {
            let mut cfg = base(&common, Sweep::Spectrum { freq_offset_mhz: Range::new(-30.0, 30.0, 601) }, 1.0)?;
            if let Sweep::Spectrum { freq_offset_mhz: w } = &mut cfg.sweep {
                set(w, freq_offset_mhz);
            }
            cfg
        }
        Command::SweepPhase { common, phi_deg_range, freq_offset_mhz } => {
            let default = Sweep::PhaseSweep { phi_deg: phi_full(73), freq_offset_mhz: Range::new(-20.0, 20.0, 201) };
            let mut cfg = base(&common, default, 1.0)?;
            if let Sweep::PhaseSweep { phi_deg: p, freq_offset_mhz: w } = &mut cfg.sweep {
                set(p, phi_deg_range);
                set(w, freq_offset_mhz);
            }
            cfg
        }
        Command::MapDeltaPhi { common, delta_range, phi_deg_range, dips } => {
            let default = Sweep::DeltaPhiMap { delta: Range::new(0.0, 1.0, 21), phi_deg: phi_full(73), method: SplittingMethod::Coupling };
            let mut cfg = base(&common, default, 1.0)?;
            if let Sweep::DeltaPhiMap { delta: d, phi_deg: p, method } = &mut cfg.sweep {
                set(d, delta_range);
                set(p, phi_deg_range);
                if dips {
                    *method = SplittingMethod::Dips;
                }
            }
            cfg
        }
        Command::LlgCone { common, phi_deg_range, h_over_ms } => {
            let default = Sweep::LlgCone { phi_deg: phi_full(13), h_over_ms: 1e-6, steps_per_period: 64, decay_times: 8.0, window_periods: 20 };
            let mut cfg = base(&common, default, 1.0)?;
            if let Sweep::LlgCone { phi_deg: p, h_over_ms: h, .. } = &mut cfg.sweep {
                set(p, phi_deg_range);
                set(h, h_over_ms);
            }
            cfg
        }
        Command::Susceptibility { common, freq_ghz, damped } => {
            let mut cfg = base(&common, Sweep::Susceptibility { freq_ghz: Range::new(0.05, 13.0, 519), damped: false }, 0.0)?;
            if let Sweep::Susceptibility { freq_ghz: f, damped: d } = &mut cfg.sweep {
                set(f, freq_ghz);
                *d |= damped;
            }
            cfg
        }
        Command::Fit { input, format, average, common } => {
            let mut cfg = base(&common, Sweep::Fit { input: input.clone(), format, average }, 0.0)?;
            cfg.sweep = Sweep::Fit { input, format, average };
            cfg
        }
        Command::Ingest { input, format, out } => {
            let spectra = ingest_spectra(&input, format)?;
            for s in &spectra {
                let (lo, hi) = (s.omega.first().copied().unwrap_or(f64::NAN), s.omega.last().copied().unwrap_or(f64::NAN));
                let tau = std::f64::consts::TAU;
                println!("label {:e}: {} points, {:.6}..{:.6} GHz", s.label, s.omega.len(), lo / tau * 1e-9, hi / tau * 1e-9);
            }
            if let Some(path) = out {
                let mut file = SpectraFile::new(["label", "freq_Hz", "mag", "phase_rad"]).with_meta("source", input.display().to_string());
                for s in &spectra {
                    for ((w, z), m) in s.omega.iter().zip(&s.s11).zip(&s.magnitude) {
                        file.push(vec![s.label, w / std::f64::consts::TAU, *m, z.arg()]);
                    }
                }
                file.write_to(&path).map_err(|source| RunError::Io { path, source })?;
            }
            return Ok(None);
        }
    };
    cfg.validate()?;
    Ok(Some(cfg))
}

fn workers() -> Result<(), String> {
    let Ok(v) = std::env::var("MAGPOL_WORKERS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| format!("MAGPOL_WORKERS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("MAGPOL_WORKERS must be a positive integer".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = workers() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = build(cli.command).and_then(|cfg| match cfg {
        Some(cfg) => magpol_cli::run(&cfg).map(|out| out.summary),
        None => Ok(Vec::new()),
    });
    match result {
        Ok(summary) => {
            for line in summary {
                eprintln!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e @ RunError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
