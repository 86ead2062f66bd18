//! Scalar abstraction shared by every physics routine.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the physics is generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Vacuum permeability [H/m].
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum [m/s].
pub const C0: f64 = 299_792_458.0;

/// Converts linear frequency in GHz to angular frequency in rad/s.
pub fn ghz_to_angular<T: Real>(f_ghz: T) -> T {
    f_ghz * T::lit(1e9) * T::two_pi()
}

/// Converts angular frequency in rad/s to linear frequency in GHz.
pub fn angular_to_ghz<T: Real>(omega: T) -> T {
    omega / (T::two_pi() * T::lit(1e9))
}

/// Converts linear frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_angular<T: Real>(f_mhz: T) -> T {
    f_mhz * T::lit(1e6) * T::two_pi()
}

/// Converts angular frequency in rad/s to linear frequency in MHz.
pub fn angular_to_mhz<T: Real>(omega: T) -> T {
    omega / (T::two_pi() * T::lit(1e6))
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase<T: Real>(phi: T) -> T {
    let tau = T::two_pi();
    let mut p = phi % tau;
    if p <= -T::PI() {
        p = p + tau;
    } else if p > T::PI() {
        p = p - tau;
    }
    p
}
