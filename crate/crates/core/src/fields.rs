//! TE_mn0 magnetic fields of the rectangular cavity, their two-port
//! superposition, local polarisation, and the energy integrals that feed
//! perturbation theory.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::params::{CavityParams, DriveState, MagnetParams, ModeIndex};
use crate::quadrature::GaussLegendre;
use crate::scalar::{Real, MU0};

/// Transverse magnetic field of one TE_mn0 mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeField<T> {
    pub amplitude: T,
    pub mode: ModeIndex,
    pub kappa0x: T,
    pub kappa0y: T,
    omega_c: T,
}

impl<T: Real> ModeField<T> {
    pub fn new(cavity: &CavityParams<T>, mode: ModeIndex, amplitude: T) -> Self {
        Self {
            amplitude,
            mode,
            kappa0x: T::lit(f64::from(mode.m)) * T::PI() / cavity.a(),
            kappa0y: T::lit(f64::from(mode.n)) * T::PI() / cavity.b(),
            omega_c: cavity.omega_c(),
        }
    }

    /// `h_x = iA(κ₀ᵧ/ω_cμ₀) sin(κ₀ₓx) cos(κ₀ᵧy)`,
    /// `h_y = −iA(κ₀ₓ/ω_cμ₀) cos(κ₀ₓx) sin(κ₀ᵧy)`. No bounds check.
    pub fn at(&self, x: T, y: T) -> [Complex<T>; 2] {
        let scale = self.amplitude / (self.omega_c * T::lit(MU0));
        let (sx, cx) = (self.kappa0x * x).sin_cos();
        let (sy, cy) = (self.kappa0y * y).sin_cos();
        [
            Complex::new(T::zero(), scale * self.kappa0y * sx * cy),
            Complex::new(T::zero(), -scale * self.kappa0x * cx * sy),
        ]
    }
}

fn check_inside<T: Real>(cavity: &CavityParams<T>, x: T, y: T) -> Result<()> {
    let z = cavity.c() * T::lit(0.5);
    if cavity.contains(x, y, z) {
        Ok(())
    } else {
        Err(Error::OutOfCavity { x: x.as_f64(), y: y.as_f64(), z: z.as_f64() })
    }
}

/// Unit-amplitude field of `mode` at `(x, y)`.
pub fn te_mode_field<T: Real>(cavity: &CavityParams<T>, mode: ModeIndex, point: (T, T)) -> Result<[Complex<T>; 2]> {
    check_inside(cavity, point.0, point.1)?;
    Ok(ModeField::new(cavity, mode, T::one()).at(point.0, point.1))
}

/// Sign applied to the port-2 mode so that, at the cavity centre, its
/// dominant component is in phase with the port-1 dominant component.
///
/// With that reference the relative phase φ of the drive is exactly the
/// phase between `h_y` and `h_x` at the sample. TE_mn0 magnetic fields are
/// purely imaginary, so the reference is a real ±1.
pub fn port_phase_reference<T: Real>(cavity: &CavityParams<T>) -> T {
    let [first, second] = cavity.modes();
    let (xc, yc, _) = cavity.centre();
    let p1 = dominant(ModeField::new(cavity, first, T::one()).at(xc, yc));
    let p2 = dominant(ModeField::new(cavity, second, T::one()).at(xc, yc));
    if p1.im == T::zero() || p2.im == T::zero() || (p1.im > T::zero()) == (p2.im > T::zero()) {
        T::one()
    } else {
        -T::one()
    }
}

fn dominant<T: Real>(h: [Complex<T>; 2]) -> Complex<T> {
    if h[0].norm() >= h[1].norm() {
        h[0]
    } else {
        h[1]
    }
}

fn superposition<T: Real>(cavity: &CavityParams<T>, drive: &DriveState<T>) -> impl Fn(T, T) -> [Complex<T>; 2] {
    let [first, second] = cavity.modes();
    let f1 = ModeField::new(cavity, first, T::one());
    let f2 = ModeField::new(cavity, second, T::one());
    let weight = Complex::from_polar(drive.delta(), drive.phi()) * port_phase_reference(cavity);
    move |x, y| {
        let a = f1.at(x, y);
        let b = f2.at(x, y);
        [a[0] + weight * b[0], a[1] + weight * b[1]]
    }
}

/// Two-port field `h(port 1) + δe^{iφ}·h(port 2)` at `(x, y)`.
pub fn superposed_field<T: Real>(
    cavity: &CavityParams<T>,
    drive: &DriveState<T>,
    point: (T, T),
) -> Result<[Complex<T>; 2]> {
    check_inside(cavity, point.0, point.1)?;
    Ok(superposition(cavity, drive)(point.0, point.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Handedness {
    /// Real field vector turns counter-clockwise seen from +ẑ.
    Right,
    Left,
    Linear,
}

/// Shape of the time-domain locus `Re[h e^{iωt}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarisationEllipse<T> {
    /// Minor over major axis, in [0, 1].
    pub axial_ratio: T,
    pub handedness: Handedness,
    /// Orientation of the major axis from x̂, in (−π/2, π/2].
    pub major_axis_angle: T,
}

/// Below this |S₃|/S₀ the locus is reported as exactly linear.
pub const LINEAR_THRESHOLD: f64 = 1e-12;

/// Ellipse parameters of a complex transverse vector via its Stokes parameters.
pub fn polarisation_of<T: Real>(h: [Complex<T>; 2]) -> Result<PolarisationEllipse<T>> {
    let s0 = h[0].norm_sqr() + h[1].norm_sqr();
    if !(s0 > T::zero()) {
        return Err(Error::DegenerateField);
    }
    let s1 = h[0].norm_sqr() - h[1].norm_sqr();
    let cross = h[0] * h[1].conj();
    let s2 = T::lit(2.0) * cross.re;
    let s3 = T::lit(2.0) * cross.im;
    let mut angle = T::lit(0.5) * s2.atan2(s1);
    if angle <= -T::FRAC_PI_2() {
        angle = angle + T::PI();
    }
    let ratio_s3 = (s3 / s0).min(T::one()).max(-T::one());
    if ratio_s3.abs() <= T::lit(LINEAR_THRESHOLD) {
        return Ok(PolarisationEllipse { axial_ratio: T::zero(), handedness: Handedness::Linear, major_axis_angle: angle });
    }
    let axial_ratio = (T::lit(0.5) * ratio_s3.abs().asin()).tan().min(T::one());
    let handedness = if ratio_s3 > T::zero() { Handedness::Right } else { Handedness::Left };
    Ok(PolarisationEllipse { axial_ratio, handedness, major_axis_angle: angle })
}

pub fn polarisation_at_point<T: Real>(
    cavity: &CavityParams<T>,
    drive: &DriveState<T>,
    point: (T, T),
) -> Result<PolarisationEllipse<T>> {
    polarisation_of(superposed_field(cavity, drive, point)?)
}

fn require_derived_pair<T: Real>(cavity: &CavityParams<T>) -> Result<()> {
    let [first, second] = cavity.modes();
    let pair_ok = first == ModeIndex::new(1, 2) && second == ModeIndex::new(2, 1);
    if !pair_ok || cavity.a() != cavity.b() {
        return Err(Error::UnsupportedModePair {
            expected: "square cavity with TE120 + TE210",
            got: format!("{first} + {second}, a = {}, b = {}", cavity.a(), cavity.b()),
        });
    }
    Ok(())
}

/// Closed-form `W_c = 5π²(1 + δ²)c/(2μ₀ω_c²)` for unit mode amplitude.
pub fn cavity_energy_analytic<T: Real>(cavity: &CavityParams<T>, drive: &DriveState<T>) -> Result<T> {
    require_derived_pair(cavity)?;
    let delta = drive.delta();
    let wc = cavity.omega_c();
    Ok(T::lit(5.0) * T::PI() * T::PI() * (T::one() + delta * delta) * cavity.c()
        / (T::lit(2.0) * T::lit(MU0) * wc * wc))
}

/// `W_c = 2∫μ₀|h_c|² dv` by tensor-product Gauss-Legendre over the cross
/// section; the l = 0 fields do not depend on z.
pub fn cavity_energy_numeric<T: Real>(cavity: &CavityParams<T>, drive: &DriveState<T>, quadrature_order: usize) -> Result<T> {
    if quadrature_order < 2 {
        return Err(Error::invalid("quadrature_order", "needs at least 2 points per axis"));
    }
    let rule = GaussLegendre::new(quadrature_order);
    let field = superposition(cavity, drive);
    let mut sum = T::zero();
    for (x, wx) in rule.on_interval(T::zero(), cavity.a()) {
        for (y, wy) in rule.on_interval(T::zero(), cavity.b()) {
            let h = field(x, y);
            sum = sum + wx * wy * (h[0].norm_sqr() + h[1].norm_sqr());
        }
    }
    Ok(T::lit(2.0) * T::lit(MU0) * cavity.c() * sum)
}

/// Cross-section integrals of the two excited modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOverlaps<T> {
    /// ∫|h_x1|², ∫|h_x2|², ∫|h_y1|², ∫|h_y2|².
    pub diagonal: [T; 4],
    /// ∫h_x2 h_x1*, ∫h_x1 h_x2*, ∫h_y2 h_y1*, ∫h_y1 h_y2*.
    pub cross: [Complex<T>; 4],
}

pub fn mode_overlaps<T: Real>(cavity: &CavityParams<T>, quadrature_order: usize) -> ModeOverlaps<T> {
    let rule = GaussLegendre::new(quadrature_order.max(2));
    let [first, second] = cavity.modes();
    let f1 = ModeField::new(cavity, first, T::one());
    let f2 = ModeField::new(cavity, second, T::one());
    let zero = Complex::new(T::zero(), T::zero());
    let mut diagonal = [T::zero(); 4];
    let mut cross = [zero; 4];
    for (x, wx) in rule.on_interval(T::zero(), cavity.a()) {
        for (y, wy) in rule.on_interval(T::zero(), cavity.b()) {
            let w = wx * wy;
            let a = f1.at(x, y);
            let b = f2.at(x, y);
            diagonal[0] = diagonal[0] + w * a[0].norm_sqr();
            diagonal[1] = diagonal[1] + w * b[0].norm_sqr();
            diagonal[2] = diagonal[2] + w * a[1].norm_sqr();
            diagonal[3] = diagonal[3] + w * b[1].norm_sqr();
            cross[0] = cross[0] + b[0] * a[0].conj() * w;
            cross[1] = cross[1] + a[0] * b[0].conj() * w;
            cross[2] = cross[2] + b[1] * a[1].conj() * w;
            cross[3] = cross[3] + a[1] * b[1].conj() * w;
        }
    }
    ModeOverlaps { diagonal, cross }
}

/// Polarisation bracket `1 + δ² + 2σδ sin φ`.
pub fn polarisation_factor<T: Real>(delta: T, phi: T, sigma: T) -> T {
    T::one() + delta * delta + T::lit(2.0) * sigma * delta * phi.sin()
}

/// Chirality-weighted local energy density `|h|² + 2σ Im(h_y h_x*)`, of which
/// the polarisation bracket is the special case at the cavity centre.
fn weighted_intensity<T: Real>(h: [Complex<T>; 2], sigma: T) -> T {
    let cross = h[1] * h[0].conj();
    h[0].norm_sqr() + h[1].norm_sqr() + T::lit(2.0) * sigma * cross.im
}

fn check_sphere<T: Real>(cavity: &CavityParams<T>, magnet: &MagnetParams<T>, p: (T, T, T)) -> Result<()> {
    let r = magnet.sample_diameter() * T::lit(0.5);
    let inside = cavity.contains(p.0 - r, p.1 - r, p.2 - r) && cavity.contains(p.0 + r, p.1 + r, p.2 + r);
    if inside {
        Ok(())
    } else {
        Err(Error::OutOfCavity { x: p.0.as_f64(), y: p.1.as_f64(), z: p.2.as_f64() })
    }
}

/// Magnetic energy at the sample, `W_p = [1 + δ² + 2σδ sin φ]∫_{δv}μ₀|h|² dv`,
/// with the field taken uniform over the sphere at its centre value.
pub fn sample_energy<T: Real>(
    cavity: &CavityParams<T>,
    drive: &DriveState<T>,
    magnet: &MagnetParams<T>,
    sample_position: (T, T, T),
) -> Result<T> {
    check_sphere(cavity, magnet, sample_position)?;
    let h = superposition(cavity, drive)(sample_position.0, sample_position.1);
    Ok(T::lit(MU0) * magnet.sample_volume() * weighted_intensity(h, drive.sigma()))
}

/// Same as [`sample_energy`] but integrating the field over the sphere with
/// an `order`-point rule in each spherical coordinate.
pub fn sample_energy_quadrature<T: Real>(
    cavity: &CavityParams<T>,
    drive: &DriveState<T>,
    magnet: &MagnetParams<T>,
    sample_position: (T, T, T),
    order: usize,
) -> Result<T> {
    check_sphere(cavity, magnet, sample_position)?;
    let rule = GaussLegendre::new(order.max(2));
    let field = superposition(cavity, drive);
    let radius = magnet.sample_diameter() * T::lit(0.5);
    let sigma = drive.sigma();
    let mut sum = T::zero();
    for (r, wr) in rule.on_interval(T::zero(), radius) {
        for (u, wu) in rule.on_interval(-T::one(), T::one()) {
            let s = (T::one() - u * u).sqrt();
            for (az, wa) in rule.on_interval(T::zero(), T::two_pi()) {
                let x = sample_position.0 + r * s * az.cos();
                let y = sample_position.1 + r * s * az.sin();
                sum = sum + wr * wu * wa * r * r * weighted_intensity(field(x, y), sigma);
            }
        }
    }
    Ok(T::lit(MU0) * sum)
}

/// W_p/W_c for a sample at `sample_position`, using the closed-form cavity
/// energy where it applies and 64-point quadrature otherwise.
pub fn energy_ratio<T: Real>(
    cavity: &CavityParams<T>,
    drive: &DriveState<T>,
    magnet: &MagnetParams<T>,
    sample_position: (T, T, T),
) -> Result<T> {
    let wp = sample_energy(cavity, drive, magnet, sample_position)?;
    let wc = match cavity_energy_analytic(cavity, drive) {
        Ok(w) => w,
        Err(Error::UnsupportedModePair { .. }) => cavity_energy_numeric(cavity, drive, 64)?,
        Err(e) => return Err(e),
    };
    Ok(wp / wc)
}
