//! Linear magnetic response of the Kittel mode.
//!
//! Time dependence is `e^{+iωt}`, the convention of the drive field. With
//! that convention a passive medium has `Im χ < 0`, so phenomenological
//! damping enters as `ω₀ → ω₀ + iη`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::params::{Bias, MagnetParams};
use crate::scalar::Real;

/// Relative distance from the pole below which undamped evaluation fails.
pub const POLE_GUARD: f64 = 1e-6;

/// Polder-type tensor `[[χ_a, iχ_b], [−iχ_b, χ_a]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiTensor<T> {
    pub chi_a: Complex<T>,
    pub chi_b: Complex<T>,
}

impl<T: Real> ChiTensor<T> {
    pub fn matrix(&self) -> [[Complex<T>; 2]; 2] {
        let i: Complex<T> = Complex::i();
        [[self.chi_a, i * self.chi_b], [-i * self.chi_b, self.chi_a]]
    }

    pub fn apply(&self, h: [Complex<T>; 2]) -> [Complex<T>; 2] {
        magnetisation_response(self, h)
    }
}

/// Sense of a circularly polarised field: `Plus` is `(x̂ − iŷ)`, rotating
/// counter-clockwise seen from +ẑ; `Minus` is `(x̂ + iŷ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Circular {
    Plus,
    Minus,
}

impl Circular {
    /// Unit Jones vector (not normalised) of the field.
    pub fn jones<T: Real>(self) -> [Complex<T>; 2] {
        match self {
            Circular::Plus => [Complex::new(T::one(), T::zero()), Complex::new(T::zero(), -T::one())],
            Circular::Minus => [Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::one())],
        }
    }

    fn sign<T: Real>(self) -> T {
        match self {
            Circular::Plus => T::one(),
            Circular::Minus => -T::one(),
        }
    }
}

fn resonance<T: Real>(magnet: &MagnetParams<T>, omega0: T, omega: T, damped: bool) -> Result<Complex<T>> {
    if !(omega >= T::zero()) {
        return Err(Error::invalid("omega", format!("{omega} is negative")));
    }
    if damped {
        Ok(Complex::new(omega0, magnet.eta_kittel()))
    } else {
        let separation = (omega - omega0).abs();
        if separation <= T::lit(POLE_GUARD) * omega0.abs() {
            return Err(Error::Pole { omega0: omega0.as_f64(), separation: separation.as_f64() });
        }
        Ok(Complex::new(omega0, T::zero()))
    }
}

/// χ is dimensionless, so frequencies are rescaled to order one first; the
/// raw squares overflow single precision inside complex division.
fn scaled<T: Real>(w0: Complex<T>, omega: T, wm: T) -> (Complex<T>, T, T) {
    let s = w0.norm().max(omega).max(wm);
    if s > T::zero() {
        (w0 / s, omega / s, wm / s)
    } else {
        (w0, omega, wm)
    }
}

/// χ_a = ω₀ω_m/(ω₀² − ω²), χ_b = ±ωω_m/(ω₀² − ω²), sign following the bias.
pub fn chi_tensor<T: Real>(
    magnet: &MagnetParams<T>,
    omega0: T,
    omega: T,
    bias: Bias,
    damped: bool,
) -> Result<ChiTensor<T>> {
    let (w0, omega, wm) = scaled(resonance(magnet, omega0, omega, damped)?, omega, magnet.omega_m());
    let denom = w0 * w0 - Complex::new(omega * omega, T::zero());
    let chi_a = w0 * wm / denom;
    let chi_b = Complex::new(omega * wm * bias.sign::<T>(), T::zero()) / denom;
    Ok(ChiTensor { chi_a, chi_b })
}

/// Scalar circular susceptibility `χ^± = ω_m/(ω₀ ∓ ω)` for +ẑ bias; the
/// roles of the two senses swap when the bias is reversed.
pub fn chi_circular<T: Real>(
    magnet: &MagnetParams<T>,
    omega0: T,
    omega: T,
    sense: Circular,
    bias: Bias,
    damped: bool,
) -> Result<Complex<T>> {
    let (w0, omega, wm) = scaled(resonance(magnet, omega0, omega, damped)?, omega, magnet.omega_m());
    let s = sense.sign::<T>() * bias.sign::<T>();
    let wm = Complex::new(wm, T::zero());
    Ok(wm / (w0 - Complex::new(s * omega, T::zero())))
}

/// m = χ·h.
pub fn magnetisation_response<T: Real>(chi: &ChiTensor<T>, h: [Complex<T>; 2]) -> [Complex<T>; 2] {
    let m = chi.matrix();
    [m[0][0] * h[0] + m[0][1] * h[1], m[1][0] * h[0] + m[1][1] * h[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ghz_to_angular;
    use proptest::prelude::*;

    fn preset() -> MagnetParams<f64> {
        MagnetParams::paper_preset()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn static_limit() {
        let m = preset();
        let w0 = ghz_to_angular(6.44);
        let chi = chi_tensor(&m, w0, 0.0, Bias::PlusZ, false).unwrap();
        assert_eq!(chi.chi_b, c(0.0, 0.0));
        assert!((chi.chi_a.re - 0.1758 / 0.230).abs() < 1e-12);
    }

    #[test]
    fn half_frequency_substitution() {
        let m = preset();
        let chi = chi_tensor(&m, ghz_to_angular(6.44), ghz_to_angular(3.22), Bias::PlusZ, false).unwrap();
        // ω₀ω_m/(ω₀²−ω²) with ω_m/2π = 4.9224 GHz.
        let wm = 4.9224;
        let expect_a = 6.44 * wm / (6.44f64.powi(2) - 3.22f64.powi(2));
        let expect_b = 3.22 * wm / (6.44f64.powi(2) - 3.22f64.powi(2));
        assert!((chi.chi_a.re - expect_a).abs() < 1e-12);
        assert!((chi.chi_b.re - expect_b).abs() < 1e-12);
        assert!((chi.chi_a.re - 1.019).abs() < 1e-3);
        assert!((chi.chi_b.re - 0.509).abs() < 1e-3);
        assert_eq!(chi.chi_a.im, 0.0);
    }

    #[test]
    fn circular_values() {
        let m = preset();
        let (w0, w) = (ghz_to_angular(6.44), ghz_to_angular(3.22));
        let p = chi_circular(&m, w0, w, Circular::Plus, Bias::PlusZ, false).unwrap();
        let n = chi_circular(&m, w0, w, Circular::Minus, Bias::PlusZ, false).unwrap();
        assert!((p.re - 4.9224 / 3.22).abs() < 1e-12);
        assert!((n.re - 4.9224 / 9.66).abs() < 1e-12);
        assert!((p.re - 1.529).abs() < 1e-3 && (n.re - 0.510).abs() < 1e-3);
    }

    #[test]
    fn circular_coincide_statically() {
        let m = preset();
        let w0 = ghz_to_angular(6.44);
        let p = chi_circular(&m, w0, 0.0, Circular::Plus, Bias::PlusZ, false).unwrap();
        let n = chi_circular(&m, w0, 0.0, Circular::Minus, Bias::PlusZ, false).unwrap();
        assert_eq!(p, n);
    }

    #[test]
    fn plus_diverges_below_resonance() {
        let m = preset();
        let w0 = ghz_to_angular(6.44);
        let mut last = 0.0f64;
        for k in 1..6 {
            let w = w0 * (1.0 - 10f64.powi(-k));
            let v = chi_circular(&m, w0, w, Circular::Plus, Bias::PlusZ, false).unwrap().re;
            assert!(v > 9.0 * last.max(0.1));
            last = v;
        }
        let minus = chi_circular(&m, w0, w0 * 0.99999, Circular::Minus, Bias::PlusZ, false).unwrap();
        assert!(minus.re < 0.4);
    }

    #[test]
    fn pole_guard() {
        let m = preset();
        let w0 = ghz_to_angular(6.44);
        let err = chi_tensor(&m, w0, w0 * (1.0 + 1e-7), Bias::PlusZ, false).unwrap_err();
        assert!(matches!(err, Error::Pole { .. }));
        assert!(chi_tensor(&m, w0, w0 * (1.0 + 1e-5), Bias::PlusZ, false).is_ok());
    }

    #[test]
    fn damped_resonance_is_absorptive() {
        let m = preset();
        let w0 = ghz_to_angular(6.44);
        let p = chi_circular(&m, w0, w0, Circular::Plus, Bias::PlusZ, true).unwrap();
        assert!(p.is_finite());
        assert!(p.im < 0.0);
        assert!((p.im + m.omega_m() / m.eta_kittel()).abs() < 1e-9 * p.norm());
        let chi = chi_tensor(&m, w0, w0, Bias::PlusZ, true).unwrap();
        let resp = chi.apply(Circular::Plus.jones());
        assert!(resp[0].im < 0.0);
    }

    #[test]
    fn hand_multiplication() {
        let chi = ChiTensor { chi_a: c(1.0, 0.0), chi_b: c(0.5, 0.0) };
        let m = magnetisation_response(&chi, [c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(m, [c(1.0, 0.0), c(0.0, -0.5)]);
        assert_eq!(magnetisation_response(&chi, [c(0.0, 0.0); 2]), [c(0.0, 0.0); 2]);
    }

    #[test]
    fn pole_crossing_flips_sign() {
        let m = preset();
        let w0 = ghz_to_angular(6.44);
        let below = chi_tensor(&m, w0, 0.9 * w0, Bias::PlusZ, false).unwrap();
        let above = chi_tensor(&m, w0, 1.1 * w0, Bias::PlusZ, false).unwrap();
        assert!(below.chi_a.re > 0.0 && above.chi_a.re < 0.0);
        assert!(below.chi_b.re > 0.0 && above.chi_b.re < 0.0);
    }

    #[test]
    fn single_precision_matches() {
        let m = MagnetParams::<f32>::paper_preset();
        let chi = chi_tensor(&m, ghz_to_angular(6.44f32), ghz_to_angular(3.22f32), Bias::PlusZ, false).unwrap();
        assert!((chi.chi_a.re - 1.0190).abs() < 1e-3, "{}", chi.chi_a.re);
    }

    proptest! {
        #[test]
        fn tensor_and_circular_agree(ratio in 0.0f64..3.0, damped: bool, plus: bool, up: bool) {
            prop_assume!((ratio - 1.0).abs() > 1e-3);
            let m = preset();
            let w0 = ghz_to_angular(6.44);
            let w = ratio * w0;
            let sense = if plus { Circular::Plus } else { Circular::Minus };
            let bias = if up { Bias::PlusZ } else { Bias::MinusZ };
            let chi = chi_tensor(&m, w0, w, bias, damped).unwrap();
            let h = sense.jones::<f64>();
            let resp = chi.apply(h);
            let scalar = chi_circular(&m, w0, w, sense, bias, damped).unwrap();
            for k in 0..2 {
                let expect = scalar * h[k];
                prop_assert!((resp[k] - expect).norm() <= 1e-12 * expect.norm().max(1e-300));
            }
        }

        #[test]
        fn handedness_swap_is_exact(ratio in 0.0f64..3.0, damped: bool) {
            prop_assume!((ratio - 1.0).abs() > 1e-3);
            let m = preset();
            let w0 = ghz_to_angular(6.44);
            let a = chi_circular(&m, w0, ratio * w0, Circular::Plus, Bias::MinusZ, damped).unwrap();
            let b = chi_circular(&m, w0, ratio * w0, Circular::Minus, Bias::PlusZ, damped).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
