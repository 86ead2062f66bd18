//! Cavity magnon-polariton spectroscopy under two-port polarisation control.
//!
//! A YIG sphere in a rectangular cavity is driven through two orthogonal
//! TE modes with amplitude ratio `δ` and relative phase `φ`. The crate
//! computes the field polarisation at the sample, the resulting magnon-photon
//! coupling in both a perturbative and an input-output description, the
//! reflection spectra, and the driven macrospin dynamics.
//!
//! Physics routines are generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, or to `f32` with a `32` suffix.
//!
//! ```
//! use magpol::{Bias, Drive, System};
//! use magpol::quantum_io::effective_coupling;
//!
//! let system = System::paper_preset();
//! let drive = Drive::matched_circular(Bias::PlusZ, system.resonance_field()).unwrap();
//! let g = effective_coupling(&system.coupling, &drive).magnitude();
//! assert!((g / system.coupling.g() - 2f64.sqrt()).abs() < 1e-12);
//! ```

pub mod error;
pub mod fields;
pub mod fitting;
pub mod llg;
pub mod params;
pub mod perturbation;
pub mod quadrature;
pub mod quantum_io;
pub mod scalar;
pub mod susceptibility;

pub use error::{Error, Result};
pub use params::{Bias, CavityParams, CouplingParams, DriveState, MagnetParams, ModeIndex, SystemParams};
pub use scalar::Real;

pub type Magnet = MagnetParams<f64>;
pub type Cavity = CavityParams<f64>;
pub type Coupling = CouplingParams<f64>;
pub type Drive = DriveState<f64>;
pub type System = SystemParams<f64>;
pub type Spectrum = quantum_io::ComplexSpectrum<f64>;
pub type Map = quantum_io::SpectralMap<f64>;
pub type Trajectory = llg::PrecessionTrajectory<f64>;
pub type Cone = llg::PrecessionCone<f64>;
pub type Fit = fitting::LorentzianFit<f64>;

pub type Magnet32 = MagnetParams<f32>;
pub type Cavity32 = CavityParams<f32>;
pub type Coupling32 = CouplingParams<f32>;
pub type Drive32 = DriveState<f32>;
pub type System32 = SystemParams<f32>;
