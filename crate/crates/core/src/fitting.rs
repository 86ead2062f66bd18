//! Observables from spectra: Lorentzian linewidths, dips, splittings and
//! cavity photon number.

use crate::error::{Error, Result};
use crate::params::{DriveState, MagnetParams, SystemParams};
use crate::quantum_io::{check_grid, effective_coupling, s11_for_drive, ComplexSpectrum};
use crate::scalar::{Real, HBAR};

/// `y(f) = baseline − depth/(1 + ((f − center)/hwhm)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit<T> {
    pub center: T,
    pub hwhm: T,
    pub depth: T,
    pub baseline: T,
    /// Root-sum-square of the residuals.
    pub residual_norm: T,
    pub iterations: usize,
}

impl<T: Real> LorentzianFit<T> {
    pub fn eval(&self, f: T) -> T {
        lorentzian(f, self.center, self.hwhm, self.depth, self.baseline)
    }
}

/// Starting point for the least-squares search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianGuess<T> {
    pub center: T,
    pub hwhm: T,
    pub depth: T,
    pub baseline: T,
}

pub fn lorentzian<T: Real>(f: T, center: T, hwhm: T, depth: T, baseline: T) -> T {
    let u = (f - center) / hwhm;
    baseline - depth / (T::one() + u * u)
}

pub const MIN_FIT_SAMPLES: usize = 8;
pub const MAX_FIT_ITERATIONS: usize = 200;

/// Discrete minimum plus half-depth crossings.
pub fn initial_guess<T: Real>(freqs: &[T], values: &[T]) -> Result<LorentzianGuess<T>> {
    let n = values.len();
    let edge = (n / 20).max(1);
    let baseline = (values[..edge].iter().cloned().fold(T::zero(), |a, b| a + b)
        + values[n - edge..].iter().cloned().fold(T::zero(), |a, b| a + b))
        / T::lit((2 * edge) as f64);
    let imin = argmin(values);
    let lo = values[imin];
    let hi = values.iter().cloned().fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    if imin == 0 || imin == n - 1 || !(span > T::lit(1e-12) * hi.abs().max(T::one())) {
        return Err(Error::NoDip);
    }
    let depth = baseline - lo;
    if !(depth > T::zero()) {
        return Err(Error::NoDip);
    }
    let half = baseline - depth * T::lit(0.5);
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<T> {
        let mut prev = imin;
        for i in range {
            if values[i] >= half {
                let (f0, f1) = (freqs[prev], freqs[i]);
                let (v0, v1) = (values[prev], values[i]);
                let t = if v1 != v0 { (half - v0) / (v1 - v0) } else { T::zero() };
                return Some(f0 + t * (f1 - f0));
            }
            prev = i;
        }
        None
    };
    let left = cross(&mut (0..imin).rev());
    let right = cross(&mut (imin + 1..n));
    let c = freqs[imin];
    let step = (freqs[1] - freqs[0]).abs();
    let hwhm = match (left, right) {
        (Some(l), Some(r)) => (r - l).abs() * T::lit(0.5),
        (Some(l), None) => (c - l).abs(),
        (None, Some(r)) => (r - c).abs(),
        (None, None) => step * T::lit(2.0),
    };
    Ok(LorentzianGuess { center: c, hwhm: hwhm.max(step * T::lit(0.5)), depth, baseline })
}

fn argmin<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Levenberg-Marquardt fit of a Lorentzian dip to `values(freqs)`.
pub fn fit_lorentzian<T: Real>(freqs: &[T], values: &[T], guess: Option<LorentzianGuess<T>>) -> Result<LorentzianFit<T>> {
    if freqs.len() != values.len() {
        return Err(Error::invalid("values", "length differs from the frequency grid"));
    }
    if freqs.len() < MIN_FIT_SAMPLES {
        return Err(Error::invalid("values", format!("need at least {MIN_FIT_SAMPLES} samples")));
    }
    check_grid("frequency", freqs)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values", "non-finite sample"));
    }
    let g = match guess {
        Some(g) => g,
        None => initial_guess(freqs, values)?,
    };
    if !(g.hwhm > T::zero()) {
        return Err(Error::invalid("hwhm", "initial guess must be positive"));
    }

    // Frequencies are shifted and scaled by the guess so all four
    // parameters are of order one.
    let (f0, scale) = (g.center, g.hwhm);
    let xs: Vec<T> = freqs.iter().map(|&f| (f - f0) / scale).collect();
    let mut p = [T::zero(), T::one(), g.depth, g.baseline];
    let cost = |p: &[T; 4]| -> T {
        xs.iter().zip(values).fold(T::zero(), |acc, (&x, &y)| {
            let r = y - lorentzian(x, p[0], p[1], p[2], p[3]);
            acc + r * r
        })
    };
    let mut c = cost(&p);
    let mut lambda = T::lit(1e-3);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_FIT_ITERATIONS {
        iterations += 1;
        let mut jtj = [[T::zero(); 4]; 4];
        let mut jtr = [T::zero(); 4];
        for (&x, &y) in xs.iter().zip(values) {
            let u = (x - p[0]) / p[1];
            let l = T::one() / (T::one() + u * u);
            let two_dl2 = T::lit(2.0) * p[2] * l * l / p[1];
            let row = [-two_dl2 * u, -two_dl2 * u * u, -l, T::one()];
            let r = y - (p[3] - p[2] * l);
            for a in 0..4 {
                jtr[a] = jtr[a] + row[a] * r;
                for b in 0..4 {
                    jtj[a][b] = jtj[a][b] + row[a] * row[b];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] = row[a] + lambda * jtj[a][a].max(T::lit(1e-30));
            }
            let Some(step) = solve4(m, jtr) else {
                lambda = lambda * T::lit(10.0);
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            let ct = cost(&trial);
            if ct.is_finite() && ct <= c {
                let small = step.iter().zip(&trial).all(|(s, v)| s.abs() <= T::lit(1e-13) * v.abs().max(T::one()));
                let flat = c - ct <= T::lit(1e-15) * c;
                p = trial;
                c = ct;
                lambda = (lambda / T::lit(3.0)).max(T::lit(1e-12));
                accepted = true;
                if small || (flat && c <= T::lit(1e-30)) || c == T::zero() {
                    converged = true;
                }
                break;
            }
            lambda = lambda * T::lit(4.0);
        }
        if converged {
            break;
        }
        if !accepted {
            // No downhill step exists at any damping: a stationary point.
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }
    let hwhm = p[1].abs() * scale;
    if !(hwhm > T::zero()) || !hwhm.is_finite() {
        return Err(Error::NonConvergence { iterations });
    }
    Ok(LorentzianFit {
        center: f0 + p[0] * scale,
        hwhm,
        depth: p[2],
        baseline: p[3],
        residual_norm: c.sqrt(),
        iterations,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve4<T: Real>(mut m: [[T; 4]; 4], mut b: [T; 4]) -> Option<[T; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if !(m[pivot][col].abs() > T::zero()) {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] = m[row][k] - f * m[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 4];
    for row in (0..4).rev() {
        let mut s = b[row];
        for k in row + 1..4 {
            s = s - m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Fits `|S11|²`, which is exactly Lorentzian for an uncoupled cavity with
/// half width κ.
pub fn fit_spectrum<T: Real>(spectrum: &ComplexSpectrum<T>, guess: Option<LorentzianGuess<T>>) -> Result<LorentzianFit<T>> {
    let power: Vec<T> = spectrum.s11.iter().map(|z| z.norm_sqr()).collect();
    fit_lorentzian(&spectrum.freq_grid, &power, guess)
}

/// `η = γΔH` in angular units, ΔH in tesla.
pub fn linewidth_to_eta<T: Real>(delta_h: T, magnet: &MagnetParams<T>) -> Result<T> {
    if !(delta_h >= T::zero()) {
        return Err(Error::invalid("delta_H", "must be non-negative"));
    }
    Ok(magnet.gamma_angular() * delta_h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip<T> {
    pub index: usize,
    pub frequency: T,
    pub value: T,
    pub prominence: T,
}

/// Interior local minima whose prominence is at least `prominence_floor`
/// times the spectrum's full range, ascending in frequency.
///
/// Flat-bottomed minima report their lowest-frequency sample.
pub fn find_dips<T: Real>(freqs: &[T], values: &[T], prominence_floor: T) -> Vec<Dip<T>> {
    let n = values.len().min(freqs.len());
    if n < 3 {
        return Vec::new();
    }
    let v = &values[..n];
    let hi = v.iter().cloned().fold(T::neg_infinity(), T::max);
    let lo = v.iter().cloned().fold(T::infinity(), T::min);
    let range = hi - lo;
    if !(range > T::zero()) {
        return Vec::new();
    }
    let mut dips = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if v[i] < v[i - 1] {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] > v[i] {
                let left = v[..i].iter().rev().take_while(|&&x| x >= v[i]).cloned().fold(v[i], T::max);
                let right = v[j + 1..].iter().take_while(|&&x| x >= v[i]).cloned().fold(v[i], T::max);
                let prominence = left.min(right) - v[i];
                if prominence >= prominence_floor * range {
                    dips.push(Dip { index: i, frequency: freqs[i], value: v[i], prominence });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    dips
}

/// Grid used to measure a resonant splitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingGrid<T> {
    /// Frequency step in rad/s.
    pub resolution: T,
    /// Relative prominence floor passed to [`find_dips`].
    pub prominence_floor: T,
}

impl<T: Real> Default for SplittingGrid<T> {
    /// 1 kHz steps.
    fn default() -> Self {
        Self { resolution: T::two_pi() * T::lit(1e3), prominence_floor: T::lit(0.01) }
    }
}

/// Distance between the two deepest dips of the resonant `|S11|`, with
/// the Kittel mode tuned onto the cavity.
pub fn extract_splitting<T: Real>(system: &SystemParams<T>, drive: &DriveState<T>) -> Result<T> {
    extract_splitting_with(system, drive, &SplittingGrid::default())
}

pub fn extract_splitting_with<T: Real>(system: &SystemParams<T>, drive: &DriveState<T>, grid: &SplittingGrid<T>) -> Result<T> {
    if !(grid.resolution > T::zero()) {
        return Err(Error::grid("frequency", "resolution must be positive"));
    }
    let drive = drive.with_field(system.resonance_field())?;
    let two_g = T::lit(2.0) * effective_coupling(&system.coupling, &drive).magnitude();
    let kappa = system.cavity.kappa();
    let width = kappa + system.magnet.eta_kittel();
    if !(two_g > width) {
        return Err(Error::Unresolved { two_g: two_g.as_f64(), width: width.as_f64() });
    }
    let centre = system.cavity.omega_c();
    let half_span = two_g + T::lit(5.0) * kappa;
    let count = (half_span / grid.resolution).ceil().to_usize().unwrap_or(0);
    let freqs: Vec<T> = (0..=2 * count)
        .map(|k| centre + (T::lit(k as f64) - T::lit(count as f64)) * grid.resolution)
        .collect();
    let mags: Vec<T> = freqs.iter().map(|&w| s11_for_drive(system, &drive, w).norm()).collect();
    let mut dips = find_dips(&freqs, &mags, grid.prominence_floor);
    if dips.len() < 2 {
        return Err(Error::Unresolved { two_g: two_g.as_f64(), width: width.as_f64() });
    }
    dips.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal).then(a.index.cmp(&b.index)));
    Ok((dips[0].frequency - dips[1].frequency).abs())
}

/// `⟨n⟩ = (4P/ℏω_c²)·Q_i²Q_c/(Q_i + Q_c)²`.
pub fn photon_number<T: Real>(power_in: T, omega_c: T, q_internal: T, q_coupling: T) -> Result<T> {
    if !(power_in >= T::zero()) || !(omega_c > T::zero()) || !(q_internal > T::zero()) || !(q_coupling >= T::zero()) {
        return Err(Error::invalid("photon_number", "inputs must be positive"));
    }
    let sum = q_internal + q_coupling;
    Ok(T::lit(4.0) * power_in / (T::lit(HBAR) * omega_c * omega_c) * q_internal * q_internal * q_coupling / (sum * sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Bias;
    use crate::scalar::{angular_to_mhz, mhz_to_angular};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid(center: f64, hwhm: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| center + hwhm * (-10.0 + 20.0 * k as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn noiseless_recovery() {
        for hwhm_mhz in [0.7, 4.45] {
            let (c, w) = (mhz_to_angular(6700.0), mhz_to_angular(hwhm_mhz));
            let f = grid(c + 0.3 * w, w, 201);
            let y: Vec<f64> = f.iter().map(|&x| lorentzian(x, c, w, 0.8, 1.0)).collect();
            let fit = fit_lorentzian(&f, &y, None).unwrap();
            assert!(((fit.hwhm - w) / w).abs() < 1e-6);
            assert!(((fit.center - c) / w).abs() < 1e-6);
            assert!((fit.depth - 0.8).abs() < 1e-6 && (fit.baseline - 1.0).abs() < 1e-6);
            assert!(fit.eval(fit.center) <= y.iter().cloned().fold(f64::INFINITY, f64::min) + 1e-9);
        }
    }

    #[test]
    fn noisy_recovery_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(20231014);
        for hwhm_mhz in [0.7, 4.45] {
            let (c, w) = (mhz_to_angular(6700.0), mhz_to_angular(hwhm_mhz));
            let depth = 0.8;
            let noise = Normal::new(0.0, 0.01 * depth).unwrap();
            let f = grid(c, w, 401);
            let y: Vec<f64> = f.iter().map(|&x| lorentzian(x, c, w, depth, 1.0) + noise.sample(&mut rng)).collect();
            let fit = fit_lorentzian(&f, &y, None).unwrap();
            assert!(((fit.hwhm - w) / w).abs() < 0.02, "{}", fit.hwhm / w);
        }
    }

    #[test]
    fn flat_spectrum_has_no_dip() {
        let f: Vec<f64> = (0..50).map(f64::from).collect();
        assert_eq!(fit_lorentzian(&f, &vec![1.0; 50], None), Err(Error::NoDip));
        let ramp: Vec<f64> = f.iter().map(|x| 1.0 + x).collect();
        assert_eq!(fit_lorentzian(&f, &ramp, None), Err(Error::NoDip));
    }

    #[test]
    fn too_few_samples() {
        let f = [1.0, 2.0, 3.0, 4.0];
        assert!(fit_lorentzian(&f, &[1.0, 0.5, 0.6, 1.0], None).is_err());
    }

    #[test]
    fn bare_cavity_power_fit_gives_kappa() {
        let mut sys = SystemParams::<f64>::paper_preset();
        sys.coupling = sys.coupling.with_g(0.0).unwrap();
        let wc = sys.cavity.omega_c();
        let kappa = sys.cavity.kappa();
        let d = DriveState::linear(0.5).unwrap();
        let f = grid(wc, kappa, 101);
        let spec = ComplexSpectrum::compute(&sys, &d, &f).unwrap();
        let fit = fit_spectrum(&spec, None).unwrap();
        assert!(((fit.hwhm - kappa) / kappa).abs() < 1e-6);
        assert!(((fit.center - wc) / kappa).abs() < 1e-6);
    }

    #[test]
    fn eta_from_field_linewidth() {
        let m = MagnetParams::<f64>::paper_preset();
        assert_eq!(linewidth_to_eta(0.0, &m).unwrap(), 0.0);
        let eta = linewidth_to_eta(0.025e-3, &m).unwrap();
        assert!((angular_to_mhz(eta) - 0.7).abs() < 1e-12);
        assert!((linewidth_to_eta(0.05e-3, &m).unwrap() / eta - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dips_of_bare_cavity() {
        let mut sys = SystemParams::<f64>::paper_preset();
        sys.coupling = sys.coupling.with_g(0.0).unwrap();
        let wc = sys.cavity.omega_c();
        let d = DriveState::linear(0.5).unwrap();
        let step = mhz_to_angular(0.013);
        let f: Vec<f64> = (-1000..=1000).map(|k| wc + step * f64::from(k)).collect();
        let m: Vec<f64> = f.iter().map(|&w| s11_for_drive(&sys, &d, w).norm()).collect();
        let dips = find_dips(&f, &m, 0.01);
        assert_eq!(dips.len(), 1);
        assert!((dips[0].frequency - wc).abs() <= step);
        let scaled: Vec<f64> = m.iter().map(|v| v * 37.5).collect();
        assert_eq!(find_dips(&f, &scaled, 0.01)[0].index, dips[0].index);
    }

    #[test]
    fn dip_plateau_and_ties() {
        let f: Vec<f64> = (0..9).map(f64::from).collect();
        let v = [3.0, 2.0, 1.0, 1.0, 2.0, 3.0, 1.0, 3.0, 3.0];
        let dips = find_dips(&f, &v, 0.0);
        assert_eq!(dips.iter().map(|d| d.index).collect::<Vec<_>>(), vec![2, 6]);
        assert!(find_dips::<f64>(&f, &[1.0; 9], 0.0).is_empty());
    }

    #[test]
    fn annihilated_coupling_shows_single_dip() {
        let sys = SystemParams::<f64>::paper_preset();
        let d = DriveState::opposed_circular(Bias::PlusZ, sys.resonance_field()).unwrap();
        let wc = sys.cavity.omega_c();
        let f: Vec<f64> = (-3000..=3000).map(|k| wc + mhz_to_angular(0.01 * f64::from(k))).collect();
        let m: Vec<f64> = f.iter().map(|&w| s11_for_drive(&sys, &d, w).norm()).collect();
        assert_eq!(find_dips(&f, &m, 0.01).len(), 1);
        assert!(matches!(extract_splitting(&sys, &d), Err(Error::Unresolved { .. })));
    }

    #[test]
    fn preset_splittings() {
        let sys = SystemParams::<f64>::paper_preset();
        let h = sys.resonance_field();
        let lin = angular_to_mhz(extract_splitting(&sys, &DriveState::linear(h).unwrap()).unwrap());
        let circ = angular_to_mhz(extract_splitting(&sys, &DriveState::matched_circular(Bias::PlusZ, h).unwrap()).unwrap());
        assert!((lin - 7.8).abs() < 0.3, "{lin}");
        assert!((circ - 11.0).abs() < 0.3, "{circ}");
    }

    #[test]
    fn photon_number_cases() {
        let (p, w, q) = (1e-3, mhz_to_angular(6700.0), 1e4);
        let n = photon_number(p, w, q, q).unwrap();
        assert!((n - p * q / (HBAR * w * w)).abs() < 1e-12 * n);
        assert!(photon_number(p, w, q, 1e-12).unwrap() < 1e-12 * n);
        let a = photon_number(p, w, q, 2e3).unwrap();
        let b = photon_number(p, w, q, 2e3).unwrap();
        assert_eq!(a / b, 1.0);
        assert!(photon_number(p, w, q, 3e3).unwrap() / a != 1.0);
    }
}
