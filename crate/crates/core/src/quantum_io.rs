//! Input-output model of the cavity photon coupled to the Kittel magnon.
//!
//! Works in the frame rotating at the probe frequency. The drive
//! polarisation enters only through the effective coupling `g̃`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::{kittel_frequency, Bias, CavityParams, CouplingParams, DriveState, MagnetParams, SystemParams};
use crate::scalar::{Real, HBAR, MU0};

/// Polarisation-dressed coupling `g̃` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoupling<T> {
    pub g_tilde: Complex<T>,
}

impl<T: Real> EffectiveCoupling<T> {
    pub fn magnitude(&self) -> T {
        self.g_tilde.norm()
    }
}

/// `g̃ = g(1 − iδe^{iσφ})/√(1 + δ²)` with σ = −sign(H₀).
///
/// The sign makes φ = −90° the co-rotating drive for a +ẑ bias, so
/// `|g̃|² = g²(1 + δ² + 2σδ sin φ)/(1 + δ²)`.
pub fn effective_coupling<T: Real>(coupling: &CouplingParams<T>, drive: &DriveState<T>) -> EffectiveCoupling<T> {
    let delta = drive.delta();
    let rot = Complex::from_polar(delta, drive.sigma() * drive.phi());
    let i = Complex::<T>::i();
    let norm = (T::one() + delta * delta).sqrt();
    EffectiveCoupling { g_tilde: (Complex::new(T::one(), T::zero()) - i * rot) * (coupling.g() / norm) }
}

/// Bare coupling from the spin count and the quantised cavity field,
/// `g = γ·η·√(5Nμ₀ℏω_c/(8v))`, N = ρδv and v the cavity volume.
///
/// This is the SI form of the Gaussian `√(5Nπℏω/(2v))`, reached by
/// replacing 4π with μ₀.
pub fn bare_g_first_principles<T: Real>(magnet: &MagnetParams<T>, cavity: &CavityParams<T>, eta_overlap: T) -> T {
    let n = magnet.spin_count();
    let field = (T::lit(5.0) * n * T::lit(MU0) * T::lit(HBAR) * cavity.omega_c() / (T::lit(8.0) * cavity.volume())).sqrt();
    magnet.gamma_angular() * eta_overlap * field
}

/// `S11 = iκ(ω₀ − ω − iη)/[(ω − ω_c + iκ)(ω₀ − ω − iη) + |g̃|²] − 1`.
pub fn s11<T: Real>(omega: T, omega_c: T, omega0: T, kappa: T, eta: T, g_tilde: Complex<T>) -> Complex<T> {
    let i = Complex::<T>::i();
    let magnon = Complex::new(omega0 - omega, -eta);
    let photon = Complex::new(omega - omega_c, kappa);
    let denom = photon * magnon + Complex::new(g_tilde.norm_sqr(), T::zero());
    i * magnon * kappa / denom - Complex::new(T::one(), T::zero())
}

/// Steady-state photon and magnon amplitudes in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState<T> {
    pub photon: Complex<T>,
    pub magnon: Complex<T>,
    pub a_in: Complex<T>,
    pub a_out: Complex<T>,
}

impl<T: Real> SteadyState<T> {
    pub fn reflection(&self) -> Complex<T> {
        self.a_out / self.a_in
    }
}

/// Solves `[[ω_c − ω − iκ, g̃], [g̃*, ω₀ − ω − iη]]·(a, b) = −i(ε, 0)`.
///
/// The port is taken as critically coupled, `a_in = ε/√κ` and
/// `a_out = √κ·a − a_in`, which reproduces [`s11`] for any ε.
pub fn steady_state<T: Real>(
    omega: T,
    omega_c: T,
    omega0: T,
    kappa: T,
    eta: T,
    g_tilde: Complex<T>,
    epsilon: T,
) -> Result<SteadyState<T>> {
    if !(kappa > T::zero()) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    let m11 = Complex::new(omega_c - omega, -kappa);
    let m22 = Complex::new(omega0 - omega, -eta);
    let det = m11 * m22 - g_tilde * g_tilde.conj();
    if det.norm() == T::zero() {
        return Err(Error::invalid("omega", "steady-state matrix is singular"));
    }
    let rhs = Complex::new(T::zero(), -epsilon);
    let photon = m22 * rhs / det;
    let magnon = -g_tilde.conj() * rhs / det;
    let root = kappa.sqrt();
    let a_in = Complex::new(epsilon / root, T::zero());
    let a_out = photon * root - a_in;
    Ok(SteadyState { photon, magnon, a_in, a_out })
}

/// Eigenvalues of `[[ω_c − iκ, g̃], [g̃*, ω₀ − iη]]`, ordered by real part.
pub fn hybrid_eigenvalues_io<T: Real>(omega_c: T, omega0: T, kappa: T, eta: T, g_tilde: Complex<T>) -> [Complex<T>; 2] {
    let a = Complex::new(omega_c, -kappa);
    let d = Complex::new(omega0, -eta);
    let half = T::lit(0.5);
    let mean = (a + d) * half;
    let diff = (a - d) * half;
    let root = (diff * diff + Complex::new(g_tilde.norm_sqr(), T::zero())).sqrt();
    let (lo, hi) = (mean - root, mean + root);
    if lo.re <= hi.re {
        [lo, hi]
    } else {
        [hi, lo]
    }
}

/// `ε_c = √(2κD_c/(ℏω))`, `probe_power` in watts.
pub fn probe_strength<T: Real>(probe_power: T, kappa: T, omega_probe: T) -> T {
    (T::lit(2.0) * kappa * probe_power / (T::lit(HBAR) * omega_probe)).sqrt()
}

/// Reflection for a full system state at probe frequency `omega`.
pub fn s11_for_drive<T: Real>(system: &SystemParams<T>, drive: &DriveState<T>, omega: T) -> Complex<T> {
    let g = effective_coupling(&system.coupling, drive).g_tilde;
    s11(
        omega,
        system.cavity.omega_c(),
        kittel_frequency(&system.magnet, drive),
        system.cavity.kappa(),
        system.magnet.eta_kittel(),
        g,
    )
}

/// Complex reflection over a frequency grid, with the state that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum<T> {
    pub freq_grid: Vec<T>,
    pub s11: Vec<Complex<T>>,
    pub drive: DriveState<T>,
    pub system: SystemParams<T>,
}

impl<T: Real> ComplexSpectrum<T> {
    pub fn compute(system: &SystemParams<T>, drive: &DriveState<T>, freq_grid: &[T]) -> Result<Self> {
        check_grid("frequency", freq_grid)?;
        let s11 = freq_grid.iter().map(|&w| s11_for_drive(system, drive, w)).collect();
        Ok(Self { freq_grid: freq_grid.to_vec(), s11, drive: *drive, system: *system })
    }

    pub fn magnitude(&self) -> Vec<T> {
        self.s11.iter().map(|z| z.norm()).collect()
    }

    pub fn phase(&self) -> Vec<T> {
        self.s11.iter().map(|z| z.arg()).collect()
    }
}

/// What a map axis holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Bias induction μ₀H₀ in tesla.
    Field,
    /// Relative drive phase φ in radians.
    Phase,
    /// Drive amplitude ratio δ.
    Delta,
    /// Probe frequency in rad/s.
    Frequency,
}

/// Row-major `axis1 × axis2` grid of values.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMap<T, V = Complex<T>> {
    pub axis1_kind: Axis,
    pub axis1: Vec<T>,
    pub axis2_kind: Axis,
    pub axis2: Vec<T>,
    pub values: Vec<V>,
}

impl<T: Real, V: Copy> SpectralMap<T, V> {
    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.len(), self.axis2.len())
    }

    pub fn get(&self, i: usize, j: usize) -> V {
        self.values[i * self.axis2.len() + j]
    }

    pub fn row(&self, i: usize) -> &[V] {
        let n = self.axis2.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn map_values<W, F: Fn(V) -> W>(&self, f: F) -> SpectralMap<T, W> {
        SpectralMap {
            axis1_kind: self.axis1_kind,
            axis1: self.axis1.clone(),
            axis2_kind: self.axis2_kind,
            axis2: self.axis2.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl<T: Real> SpectralMap<T, Complex<T>> {
    pub fn magnitude(&self) -> SpectralMap<T, T> {
        self.map_values(|z| z.norm())
    }

    pub fn phase(&self) -> SpectralMap<T, T> {
        self.map_values(|z| z.arg())
    }
}

impl<T: Real> SpectralMap<T, T> {
    /// Min-max scaled copy in [0, 1]; a flat map becomes all zeros.
    pub fn normalised(&self) -> Self {
        let lo = self.values.iter().cloned().fold(T::infinity(), T::min);
        let hi = self.values.iter().cloned().fold(T::neg_infinity(), T::max);
        let span = hi - lo;
        self.map_values(|v| if span > T::zero() { (v - lo) / span } else { T::zero() })
    }
}

/// Grids must be non-empty, finite and strictly monotone.
pub fn check_grid<T: Real>(axis: &'static str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::grid(axis, "grid is empty"));
    }
    if let Some(k) = grid.iter().position(|v| !v.is_finite()) {
        return Err(Error::grid(axis, format!("value {k} is not finite")));
    }
    if grid.len() > 1 {
        let rising = grid[1] > grid[0];
        let ok = grid.windows(2).all(|w| if rising { w[1] > w[0] } else { w[1] < w[0] });
        if !ok {
            return Err(Error::grid(axis, "grid is not strictly monotone"));
        }
    }
    Ok(())
}

fn sweep<T: Real, F>(axis1_kind: Axis, axis1: &[T], freq_grid: &[T], state: F) -> Result<SpectralMap<T>>
where
    F: Fn(T) -> Result<(SystemParams<T>, DriveState<T>)> + Sync,
{
    check_grid("frequency", freq_grid)?;
    let rows: Vec<Vec<Complex<T>>> = axis1
        .par_iter()
        .map(|&x| {
            let (system, drive) = state(x)?;
            Ok(freq_grid.iter().map(|&w| s11_for_drive(&system, &drive, w)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(SpectralMap {
        axis1_kind,
        axis1: axis1.to_vec(),
        axis2_kind: Axis::Frequency,
        axis2: freq_grid.to_vec(),
        values: rows.into_iter().flatten().collect(),
    })
}

/// Complex S11 over bias field (rows) and probe frequency (columns).
pub fn field_sweep_map<T: Real>(
    system: &SystemParams<T>,
    drive: &DriveState<T>,
    field_grid: &[T],
    freq_grid: &[T],
) -> Result<SpectralMap<T>> {
    check_grid("field", field_grid)?;
    sweep(Axis::Field, field_grid, freq_grid, |h| Ok((*system, drive.with_field(h)?)))
}

/// Complex S11 over drive phase (rows) and frequency, with the Kittel mode
/// tuned onto the cavity.
pub fn phase_sweep_map<T: Real>(
    system: &SystemParams<T>,
    delta: T,
    bias: Bias,
    phi_grid: &[T],
    freq_grid: &[T],
) -> Result<SpectralMap<T>> {
    check_grid("phi", phi_grid)?;
    let base = DriveState::new(delta, T::zero(), bias, system.resonance_field(), T::zero())?;
    sweep(Axis::Phase, phi_grid, freq_grid, |phi| Ok((*system, base.with_phi(phi)?)))
}

/// Resonant splitting `Δω = 2|g̃(δ, φ)|` over (δ, φ).
pub fn splitting_map<T: Real>(
    system: &SystemParams<T>,
    bias: Bias,
    delta_grid: &[T],
    phi_grid: &[T],
) -> Result<SpectralMap<T, T>> {
    check_grid("delta", delta_grid)?;
    check_grid("phi", phi_grid)?;
    let h = system.resonance_field();
    let rows: Vec<Vec<T>> = delta_grid
        .par_iter()
        .map(|&delta| {
            phi_grid
                .iter()
                .map(|&phi| {
                    let drive = DriveState::new(delta, phi, bias, h, T::zero())?;
                    Ok(T::lit(2.0) * effective_coupling(&system.coupling, &drive).magnitude())
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(SpectralMap {
        axis1_kind: Axis::Delta,
        axis1: delta_grid.to_vec(),
        axis2_kind: Axis::Phase,
        axis2: phi_grid.to_vec(),
        values: rows.into_iter().flatten().collect(),
    })
}
