//! Physical parameters, unit conventions and derived frequencies.
//!
//! Frequencies are angular (rad/s) everywhere inside the crate. The
//! gyromagnetic ratio is stored in GHz/T of *linear* frequency, so
//! `ω = 2π·γ·B` with `γ` converted on read.

use crate::error::{Error, Result};
use crate::scalar::{wrap_phase, Real, C0};

/// Material constants of the magnetic sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetParams<T> {
    mu0_ms: T,
    gamma: T,
    rho: T,
    sample_diameter: T,
    alpha: T,
    eta_kittel: T,
}

impl<T: Real> MagnetParams<T> {
    /// `mu0_ms` in tesla, `gamma` in GHz/T, `rho` in 1/m³, diameter in m,
    /// `alpha` dimensionless, `eta_kittel` in rad/s.
    pub fn new(mu0_ms: T, gamma: T, rho: T, sample_diameter: T, alpha: T, eta_kittel: T) -> Result<Self> {
        let p = Self { mu0_ms, gamma, rho, sample_diameter, alpha, eta_kittel };
        p.validate()?;
        Ok(p)
    }

    /// YIG sphere of the experiment: 0.25 mm diameter, μ₀M_s = 0.1758 T,
    /// γ = 28 GHz/T, ρ = 4.22×10²⁷ m⁻³, η/2π = 0.7 MHz.
    ///
    /// The Gilbert damping is not measured directly; it is set to
    /// `η/ω₀` at the 230 mT operating point so time- and frequency-domain
    /// decay rates agree.
    pub fn paper_preset() -> Self {
        let gamma = T::lit(28.0);
        let eta = T::two_pi() * T::lit(0.7e6);
        let omega0 = T::two_pi() * gamma * T::lit(1e9) * T::lit(0.230);
        Self {
            mu0_ms: T::lit(0.1758),
            gamma,
            rho: T::lit(4.22e27),
            sample_diameter: T::lit(0.25e-3),
            alpha: eta / omega0,
            eta_kittel: eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("mu0_Ms", self.mu0_ms)?;
        positive("gamma", self.gamma)?;
        positive("rho", self.rho)?;
        positive("sample_diameter", self.sample_diameter)?;
        non_negative("alpha", self.alpha)?;
        non_negative("eta_kittel", self.eta_kittel)?;
        Ok(())
    }

    pub fn mu0_ms(&self) -> T {
        self.mu0_ms
    }

    /// Gyromagnetic ratio in GHz/T (linear frequency).
    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Gyromagnetic ratio in rad/(s·T).
    pub fn gamma_angular(&self) -> T {
        T::two_pi() * self.gamma * T::lit(1e9)
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn sample_diameter(&self) -> T {
        self.sample_diameter
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn eta_kittel(&self) -> T {
        self.eta_kittel
    }

    /// ω_m = 2π·γ·μ₀M_s.
    pub fn omega_m(&self) -> T {
        self.gamma_angular() * self.mu0_ms
    }

    /// Sphere volume δv = (π/6)·d³.
    pub fn sample_volume(&self) -> T {
        T::PI() / T::lit(6.0) * self.sample_diameter.powi(3)
    }

    /// Number of spins N = ρ·δv.
    pub fn spin_count(&self) -> T {
        self.rho * self.sample_volume()
    }

    /// Saturation magnetisation M_s in A/m.
    pub fn saturation_magnetisation(&self) -> T {
        self.mu0_ms / T::lit(crate::scalar::MU0)
    }

    pub fn with_alpha(self, alpha: T) -> Result<Self> {
        Self::new(self.mu0_ms, self.gamma, self.rho, self.sample_diameter, alpha, self.eta_kittel)
    }

    pub fn with_eta_kittel(self, eta_kittel: T) -> Result<Self> {
        Self::new(self.mu0_ms, self.gamma, self.rho, self.sample_diameter, self.alpha, eta_kittel)
    }

    pub fn with_sample_diameter(self, d: T) -> Result<Self> {
        Self::new(self.mu0_ms, self.gamma, self.rho, d, self.alpha, self.eta_kittel)
    }
}

/// Transverse TE mode indices `(m, n)`; the longitudinal index is always 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub m: u32,
    pub n: u32,
}

impl ModeIndex {
    pub const fn new(m: u32, n: u32) -> Self {
        Self { m, n }
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TE{}{}0", self.m, self.n)
    }
}

/// Rectangular cavity driven through two ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams<T> {
    a: T,
    b: T,
    c: T,
    omega_c: T,
    kappa: T,
    modes: [ModeIndex; 2],
}

impl<T: Real> CavityParams<T> {
    pub fn new(a: T, b: T, c: T, omega_c: T, kappa: T, modes: [ModeIndex; 2]) -> Result<Self> {
        let p = Self { a, b, c, omega_c, kappa, modes };
        p.validate()?;
        Ok(p)
    }

    /// 50×50×5 mm square cavity, TE₁₂₀ on port 1 and TE₂₁₀ on port 2,
    /// κ/2π = 4.45 MHz. The resonance is the empty-box TE₁₂₀ frequency.
    pub fn paper_preset() -> Self {
        let a = T::lit(0.050);
        let b = T::lit(0.050);
        let modes = [ModeIndex::new(1, 2), ModeIndex::new(2, 1)];
        Self {
            a,
            b,
            c: T::lit(0.005),
            omega_c: te_resonance(a, b, modes[0]),
            kappa: T::two_pi() * T::lit(4.45e6),
            modes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("a", self.a)?;
        positive("b", self.b)?;
        positive("c", self.c)?;
        positive("omega_c", self.omega_c)?;
        positive("kappa", self.kappa)?;
        for mode in self.modes {
            if mode.m == 0 && mode.n == 0 {
                return Err(Error::invalid("modes", "TE000 is not a cavity mode"));
            }
        }
        Ok(())
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn omega_c(&self) -> T {
        self.omega_c
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn modes(&self) -> [ModeIndex; 2] {
        self.modes
    }

    pub fn volume(&self) -> T {
        self.a * self.b * self.c
    }

    pub fn centre(&self) -> (T, T, T) {
        let half = T::lit(0.5);
        (self.a * half, self.b * half, self.c * half)
    }

    pub fn contains(&self, x: T, y: T, z: T) -> bool {
        x >= T::zero() && x <= self.a && y >= T::zero() && y <= self.b && z >= T::zero() && z <= self.c
    }

    pub fn with_omega_c(self, omega_c: T) -> Result<Self> {
        Self::new(self.a, self.b, self.c, omega_c, self.kappa, self.modes)
    }

    pub fn with_kappa(self, kappa: T) -> Result<Self> {
        Self::new(self.a, self.b, self.c, self.omega_c, kappa, self.modes)
    }
}

/// Empty-box resonance of a TE_mn0 mode: `ω = c₀·π·√((m/a)² + (n/b)²)`.
pub fn te_resonance<T: Real>(a: T, b: T, mode: ModeIndex) -> T {
    let kx = T::lit(f64::from(mode.m)) / a;
    let ky = T::lit(f64::from(mode.n)) / b;
    T::lit(C0) * T::PI() * (kx * kx + ky * ky).sqrt()
}

/// Direction of the static bias field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bias {
    PlusZ,
    MinusZ,
}

impl Bias {
    /// +1 for +ẑ, −1 for −ẑ.
    pub fn sign<T: Real>(self) -> T {
        match self {
            Bias::PlusZ => T::one(),
            Bias::MinusZ => -T::one(),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Bias::PlusZ => Bias::MinusZ,
            Bias::MinusZ => Bias::PlusZ,
        }
    }
}

/// The experiment's control knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveState<T> {
    delta: T,
    phi: T,
    bias: Bias,
    mu0_h0: T,
    probe_power: T,
}

impl<T: Real> DriveState<T> {
    /// `phi` is wrapped into (−π, π]. `delta` must lie in [0, 1].
    pub fn new(delta: T, phi: T, bias: Bias, mu0_h0: T, probe_power: T) -> Result<Self> {
        if !(delta >= T::zero() && delta <= T::one()) {
            return Err(Error::invalid("delta", format!("{delta} outside [0, 1]")));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi", "not finite"));
        }
        non_negative("mu0_H0", mu0_h0)?;
        non_negative("probe_power", probe_power)?;
        Ok(Self { delta, phi: wrap_phase(phi), bias, mu0_h0, probe_power })
    }

    /// Single-port drive (δ = 0) with the bias along +ẑ.
    pub fn linear(mu0_h0: T) -> Result<Self> {
        Self::new(T::zero(), T::zero(), Bias::PlusZ, mu0_h0, T::zero())
    }

    /// Equal-amplitude drive whose chirality matches the precession for `bias`.
    pub fn matched_circular(bias: Bias, mu0_h0: T) -> Result<Self> {
        Self::new(T::one(), matched_phase::<T>(bias), bias, mu0_h0, T::zero())
    }

    /// Equal-amplitude drive rotating against the precession for `bias`.
    pub fn opposed_circular(bias: Bias, mu0_h0: T) -> Result<Self> {
        Self::new(T::one(), -matched_phase::<T>(bias), bias, mu0_h0, T::zero())
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn bias(&self) -> Bias {
        self.bias
    }

    pub fn h0_sign(&self) -> T {
        self.bias.sign()
    }

    /// Global chirality sign σ = −sign(H₀).
    pub fn sigma(&self) -> T {
        -self.h0_sign()
    }

    pub fn mu0_h0(&self) -> T {
        self.mu0_h0
    }

    pub fn probe_power(&self) -> T {
        self.probe_power
    }

    pub fn with_delta(self, delta: T) -> Result<Self> {
        Self::new(delta, self.phi, self.bias, self.mu0_h0, self.probe_power)
    }

    pub fn with_phi(self, phi: T) -> Result<Self> {
        Self::new(self.delta, phi, self.bias, self.mu0_h0, self.probe_power)
    }

    pub fn with_bias(self, bias: Bias) -> Self {
        Self { bias, ..self }
    }

    pub fn with_field(self, mu0_h0: T) -> Result<Self> {
        Self::new(self.delta, self.phi, self.bias, mu0_h0, self.probe_power)
    }

    /// Same drive with the bias reversed and the relative phase mirrored.
    pub fn mirrored(self) -> Self {
        Self { bias: self.bias.flipped(), phi: wrap_phase(-self.phi), ..self }
    }
}

/// Relative phase giving a drive co-rotating with the precession: −π/2 for
/// +ẑ bias, +π/2 for −ẑ.
pub fn matched_phase<T: Real>(bias: Bias) -> T {
    -bias.sign::<T>() * T::FRAC_PI_2()
}

/// Bare magnon-photon coupling and its spatial overlap factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams<T> {
    g: T,
    eta_overlap: T,
}

impl<T: Real> CouplingParams<T> {
    pub fn new(g: T, eta_overlap: T) -> Result<Self> {
        non_negative("g", g)?;
        if !(eta_overlap > T::zero() && eta_overlap <= T::one()) {
            return Err(Error::invalid("eta_overlap", format!("{eta_overlap} outside (0, 1]")));
        }
        Ok(Self { g, eta_overlap })
    }

    /// g/2π = 3.9 MHz fitted to the linearly polarised splitting.
    pub fn paper_preset() -> Self {
        Self { g: T::two_pi() * T::lit(3.9e6), eta_overlap: T::one() }
    }

    pub fn g(&self) -> T {
        self.g
    }

    pub fn eta_overlap(&self) -> T {
        self.eta_overlap
    }

    pub fn with_g(self, g: T) -> Result<Self> {
        Self::new(g, self.eta_overlap)
    }
}

/// Everything the spectral models need except the drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    pub magnet: MagnetParams<T>,
    pub cavity: CavityParams<T>,
    pub coupling: CouplingParams<T>,
}

impl<T: Real> SystemParams<T> {
    pub fn new(magnet: MagnetParams<T>, cavity: CavityParams<T>, coupling: CouplingParams<T>) -> Result<Self> {
        magnet.validate()?;
        cavity.validate()?;
        if cavity.volume() <= magnet.sample_volume() {
            return Err(Error::invalid("sample_diameter", "sample larger than the cavity"));
        }
        Ok(Self { magnet, cavity, coupling })
    }

    pub fn paper_preset() -> Self {
        Self {
            magnet: MagnetParams::paper_preset(),
            cavity: CavityParams::paper_preset(),
            coupling: CouplingParams::paper_preset(),
        }
    }

    /// Bias induction that tunes the Kittel mode onto the cavity.
    pub fn resonance_field(&self) -> T {
        field_for_resonance(&self.magnet, self.cavity.omega_c)
    }
}

/// Kittel frequency ω₀ = 2π·γ·μ₀H₀, independent of the bias sign.
pub fn kittel_frequency<T: Real>(magnet: &MagnetParams<T>, drive: &DriveState<T>) -> T {
    kittel_frequency_at(magnet, drive.mu0_h0)
}

pub fn kittel_frequency_at<T: Real>(magnet: &MagnetParams<T>, mu0_h0: T) -> T {
    magnet.gamma_angular() * mu0_h0
}

/// Bias induction μ₀H₀ at which the Kittel mode sits at `omega_target`.
pub fn field_for_resonance<T: Real>(magnet: &MagnetParams<T>, omega_target: T) -> T {
    omega_target / magnet.gamma_angular()
}

fn positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be non-negative and finite, got {v}")))
    }
}
