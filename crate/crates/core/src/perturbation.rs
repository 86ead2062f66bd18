//! Cavity perturbation theory: hybrid frequencies from the ratio of the
//! magnetic energy stored at the sample to that stored in the cavity.
//!
//! Damping is left out; it has negligible influence on the eigenfrequencies.

use crate::error::{Error, Result};
use crate::fields::energy_ratio;
use crate::params::{kittel_frequency, DriveState, MagnetParams, SystemParams};
use crate::scalar::Real;

/// Upper (`omega_a`) and lower (`omega_b`) hybrid frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridBranches<T> {
    pub omega_a: T,
    pub omega_b: T,
}

impl<T: Real> HybridBranches<T> {
    pub fn gap(&self) -> T {
        self.omega_a - self.omega_b
    }
}

/// Which susceptibility enters the characteristic equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ResidualForm {
    /// `ω₀² − ω² → 2ω₀(ω₀ − ω)`. The closed-form branches solve this form exactly.
    #[default]
    NearResonance,
    /// Full `ω₀ω_m/(ω₀² − ω²)`; its roots sit within ~1e-7 relative of the
    /// near-resonance ones for a millimetre sphere.
    Exact,
}

fn pole_check<T: Real>(omega: T, omega0: T) -> Result<()> {
    let separation = (omega - omega0).abs();
    if separation == T::zero() || separation <= omega0.abs() * T::epsilon() {
        return Err(Error::Pole { omega0: omega0.as_f64(), separation: separation.as_f64() });
    }
    Ok(())
}

/// Left-hand side of `(ω − ω_c)/ω_c + χ(ω)·W_p/W_c = 0`.
pub fn detuning_residual<T: Real>(
    omega: T,
    omega_c: T,
    omega0: T,
    magnet: &MagnetParams<T>,
    wp_over_wc: T,
    form: ResidualForm,
) -> Result<T> {
    pole_check(omega, omega0)?;
    if (omega + omega0).abs() <= omega0.abs() * T::epsilon() {
        return Err(Error::Pole { omega0: omega0.as_f64(), separation: (omega + omega0).abs().as_f64() });
    }
    let wm = magnet.omega_m();
    let chi = match form {
        ResidualForm::NearResonance => wm / (T::lit(2.0) * (omega0 - omega)),
        ResidualForm::Exact => omega0 * wm / ((omega0 - omega) * (omega0 + omega)),
    };
    Ok((omega - omega_c) / omega_c + chi * wp_over_wc)
}

/// `ω_{a,b} = ½[ω_c + ω₀ ± √((ω_c − ω₀)² + 2ω_cω_m·W_p/W_c)]`.
pub fn hybrid_eigenfrequencies<T: Real>(omega_c: T, omega0: T, magnet: &MagnetParams<T>, wp_over_wc: T) -> Result<HybridBranches<T>> {
    non_negative_ratio(wp_over_wc)?;
    if wp_over_wc == T::zero() {
        return Ok(HybridBranches { omega_a: omega_c.max(omega0), omega_b: omega_c.min(omega0) });
    }
    let half = T::lit(0.5);
    let detuning = omega_c - omega0;
    let root = (detuning * detuning + T::lit(2.0) * omega_c * magnet.omega_m() * wp_over_wc).sqrt();
    let mid = omega_c + omega0;
    Ok(HybridBranches { omega_a: half * (mid + root), omega_b: half * (mid - root) })
}

/// `Δω = √(2ω_cω_m·W_p/W_c)`.
pub fn rabi_splitting_pert<T: Real>(omega_c: T, magnet: &MagnetParams<T>, wp_over_wc: T) -> Result<T> {
    non_negative_ratio(wp_over_wc)?;
    Ok((T::lit(2.0) * omega_c * magnet.omega_m() * wp_over_wc).sqrt())
}

fn non_negative_ratio<T: Real>(r: T) -> Result<()> {
    if r >= T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("wp_over_wc", format!("must be non-negative, got {r}")))
    }
}

/// Roots of [`detuning_residual`] by bisection, one on each side of the pole.
///
/// Search windows are `(ω_b − 5κ, ω₀)` and `(ω₀, ω_a + 5κ)` around the
/// closed-form branches; `kappa` only sets the window margin.
pub fn eigenfrequencies_by_bisection<T: Real>(
    omega_c: T,
    omega0: T,
    magnet: &MagnetParams<T>,
    wp_over_wc: T,
    kappa: T,
    form: ResidualForm,
) -> Result<HybridBranches<T>> {
    let guess = hybrid_eigenfrequencies(omega_c, omega0, magnet, wp_over_wc)?;
    if wp_over_wc == T::zero() || !(omega0 > T::zero()) {
        return Ok(guess);
    }
    let margin = T::lit(5.0) * kappa.abs() + (guess.omega_a - guess.omega_b);
    let nudge = omega0 * T::epsilon() * T::lit(4.0);
    let f = |w: T| detuning_residual(w, omega_c, omega0, magnet, wp_over_wc, form);
    let lower = bisect(&f, guess.omega_b - margin, omega0 - nudge)?;
    let upper = bisect(&f, omega0 + nudge, guess.omega_a + margin)?;
    Ok(HybridBranches { omega_a: upper, omega_b: lower })
}

fn bisect<T: Real, F: Fn(T) -> Result<T>>(f: &F, mut lo: T, mut hi: T) -> Result<T> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Err(Error::invalid("bracket", format!("residual does not change sign on [{lo}, {hi}]")));
    }
    let tol = T::lit(1e-12);
    for _ in 0..400 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= tol * mid.abs() * T::lit(1e-3) {
            break;
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

/// W_p/W_c for a sample at the cavity centre under `drive`.
pub fn filling_ratio<T: Real>(system: &SystemParams<T>, drive: &DriveState<T>) -> Result<T> {
    energy_ratio(&system.cavity, drive, &system.magnet, system.cavity.centre())
}

/// Closed-form branches for the current bias field and drive polarisation.
pub fn branches_for_drive<T: Real>(system: &SystemParams<T>, drive: &DriveState<T>) -> Result<HybridBranches<T>> {
    let r = filling_ratio(system, drive)?;
    hybrid_eigenfrequencies(system.cavity.omega_c(), kittel_frequency(&system.magnet, drive), &system.magnet, r)
}

/// Resonant splitting for the drive polarisation, from first principles.
pub fn splitting_for_drive<T: Real>(system: &SystemParams<T>, drive: &DriveState<T>) -> Result<T> {
    rabi_splitting_pert(system.cavity.omega_c(), &system.magnet, filling_ratio(system, drive)?)
}
