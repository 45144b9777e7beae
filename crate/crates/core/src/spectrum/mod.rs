//! Fourier-side representation of periodic functions on the circle
//! `[0, 2 pi)`: Sobolev norms, multipliers, rough random data, products and
//! spectral tail slopes.

mod field;
pub mod io;
mod product;
mod slope;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use field::{bracket, SobolevIndex, SpectralField, REALITY_TOLERANCE};
pub use product::{convolve_oracle, fast_product, transform_size, ProductPlan};
pub use slope::{fit_tail_slope, shell_spectrum, Shell, SHELLS_PER_OCTAVE};

use crate::error::{Error, Result};

/// `( sum_xi <xi>^{2s} |coeff(xi)|^2 )^{1/2}`.
pub fn hs_norm(field: &SpectralField, s: SobolevIndex) -> f64 {
    let two_s = 2.0 * s.value();
    field
        .frequencies()
        .zip(field.coeffs())
        .map(|(xi, c)| bracket(xi).powf(two_s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Removes the zero mode.
pub fn project_mean_zero(field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    out.set_flags(field.is_real_valued(), true);
    out
}

/// The multiplier `<nabla>^r`, i.e. `coeff(xi) * <xi>^r`.
pub fn bessel_power(field: &SpectralField, r: f64) -> SpectralField {
    if r == 0.0 {
        return field.clone();
    }
    field.apply_even_real_symbol(|xi| bracket(xi).powf(r))
}

/// The free Airy phase `e^{i xi^3 t}`.
///
/// `xi^3 t` is formed as an exact double-double product, so the result is
/// accurate to rounding even when the angle is ~1e9 radians. Callers that
/// must agree with each other (solver, closed-form flows, residual checks)
/// all go through this function.
pub fn airy_phase(xi: i64, t: f64) -> Complex64 {
    let c = (xi * xi * xi) as f64;
    let hi = c * t;
    let lo = c.mul_add(t, -hi);
    Complex64::from_polar(1.0, hi) * Complex64::from_polar(1.0, lo)
}

/// Law for borderline-L^2 random data: deterministic moduli
/// `amplitude * <xi>^{-1/2 - epsilon}`, independent uniform phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughDataSpec {
    /// Regularity index of the experiment the data is generated for. The
    /// modulus law does not depend on it; it fixes the `u`-frame reading
    /// `|u0(xi)| ~ <xi>^{s - 1/2 - epsilon}`.
    pub s: SobolevIndex,
    pub epsilon: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub max_mode: usize,
}

impl RoughDataSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if self.max_mode == 0 {
            return Err(Error::InvalidParameter("max_mode must be positive".into()));
        }
        Ok(())
    }
}

/// Samples a real-valued, mean-zero field from `spec`. Deterministic in the
/// seed: phases are drawn in order `xi = 1, 2, ..., K` from ChaCha8.
pub fn sample_rough(spec: &RoughDataSpec) -> Result<SpectralField> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let exponent = -0.5 - spec.epsilon;
    let phases: Vec<f64> = (0..spec.max_mode).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    Ok(SpectralField::real_from_positive(spec.max_mode, |xi| {
        Complex64::from_polar(
            spec.amplitude * bracket(xi).powf(exponent),
            phases[xi as usize - 1],
        )
    }))
}

/// Analytic data `amplitude * e^{-|xi|/2}` with phases `0.3 xi`: the smooth
/// default for solver checks.
pub fn smooth_data(max_mode: usize, amplitude: f64) -> SpectralField {
    SpectralField::real_from_positive(max_mode, |xi| {
        Complex64::from_polar(amplitude * (-(xi as f64) / 2.0).exp(), 0.3 * xi as f64)
    })
}

/// `2 amplitude cos(mode x)`: coefficient `amplitude` at `+-mode`.
pub fn single_cosine(max_mode: usize, mode: i64, amplitude: f64) -> SpectralField {
    SpectralField::real_from_positive(max_mode, |xi| {
        Complex64::new(if xi == mode { amplitude } else { 0.0 }, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cosine(k: usize, mode: i64, c: f64) -> SpectralField {
        SpectralField::real_from_positive(k, |xi| {
            Complex64::new(if xi == mode { c } else { 0.0 }, 0.0)
        })
    }

    #[test]
    fn hs_norm_examples() {
        assert_eq!(hs_norm(&SpectralField::zeros(8), SobolevIndex::new(0.7)), 0.0);
        let f = cosine(4, 1, 0.5);
        assert!((hs_norm(&f, SobolevIndex::ZERO) - 0.5f64.sqrt()).abs() < 1e-15);
        let g = cosine(4, 2, 1.0);
        assert!((hs_norm(&g, SobolevIndex::new(1.0)) - 3.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn airy_phase_is_accurate_for_huge_angles() {
        assert_eq!(airy_phase(0, 1.0), Complex64::new(1.0, 0.0));
        assert_eq!(airy_phase(1000, 0.0), Complex64::new(1.0, 0.0));
        let t = 0.1;
        let a = airy_phase(1024, t);
        assert!((a * airy_phase(-1024, t) - 1.0).norm() < 1e-15);
        let half = airy_phase(1024, t / 2.0);
        assert!((half * half - a).norm() < 1e-14);
        assert!((a.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projection_clears_mean_only() {
        let mut f = SpectralField::from_fn(3, |xi| Complex64::new(if xi == 0 { 5.0 } else { 0.0 }, 0.0));
        f.coeffs_mut()[4] = Complex64::new(1.0, 0.0);
        let p = project_mean_zero(&f);
        assert_eq!(p.coeff(0), Complex64::new(0.0, 0.0));
        assert_eq!(p.coeff(1), Complex64::new(1.0, 0.0));
        assert!(p.is_mean_zero());
        let already = cosine(3, 2, 1.0);
        assert_eq!(project_mean_zero(&already), already);
    }

    #[test]
    fn bessel_power_examples() {
        let f = SpectralField::from_fn(2, |xi| Complex64::new(if xi == 1 { 1.0 } else { 0.0 }, 0.0));
        assert_eq!(bessel_power(&f, 1.0).coeff(1), Complex64::new(2.0, 0.0));
        assert_eq!(bessel_power(&f, 0.0), f);
    }

    #[test]
    fn plancherel_against_physical_samples() {
        let spec = RoughDataSpec {
            s: SobolevIndex::new(0.3),
            epsilon: 0.1,
            amplitude: 0.7,
            seed: 11,
            max_mode: 16,
        };
        let f = sample_rough(&spec).unwrap();
        let n = 4 * f.max_mode();
        let samples = f.sample_physical(n);
        // (1/2pi) int |f|^2 dx, rectangle rule is exact for trigonometric
        // polynomials of degree < n.
        let mean_square = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        let norm2 = hs_norm(&f, SobolevIndex::ZERO).powi(2);
        assert!((mean_square - norm2).abs() <= 1e-10 * norm2);
        assert!(samples.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn rough_sampling_is_deterministic_and_valid() {
        let spec = RoughDataSpec {
            s: SobolevIndex::new(0.4),
            epsilon: 0.01,
            amplitude: 1.0,
            seed: 42,
            max_mode: 256,
        };
        let a = sample_rough(&spec).unwrap();
        let b = sample_rough(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.is_real_valued() && a.is_mean_zero());
        assert_eq!(a.conjugate_symmetry_defect(), 0.0);
        assert_eq!(a.coeff(0), Complex64::new(0.0, 0.0));
        let slope = fit_tail_slope(&a, 256 / 8, 256).unwrap();
        assert!((slope - (-0.51)).abs() < 0.05, "slope {slope}");

        let other = sample_rough(&RoughDataSpec { seed: 43, ..spec.clone() }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rough_spec_validation() {
        let spec = RoughDataSpec {
            s: SobolevIndex::ZERO,
            epsilon: 0.0,
            amplitude: 1.0,
            seed: 0,
            max_mode: 8,
        };
        assert!(sample_rough(&spec).is_err());
        assert!(sample_rough(&RoughDataSpec { epsilon: 0.1, amplitude: -1.0, ..spec }).is_err());
    }

    fn arb_field(k: usize) -> impl Strategy<Value = SpectralField> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * k + 1).prop_map(move |v| {
            SpectralField::from_coeffs(k, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(f in arb_field(6)) {
            let p = project_mean_zero(&f);
            prop_assert_eq!(project_mean_zero(&p), p.clone());
            for xi in 1..=6i64 {
                prop_assert_eq!(p.coeff(xi), f.coeff(xi));
                prop_assert_eq!(p.coeff(-xi), f.coeff(-xi));
            }
        }

        #[test]
        fn bessel_power_round_trip(f in arb_field(12), r in -2.0f64..2.0) {
            let back = bessel_power(&bessel_power(&f, r), -r);
            prop_assert!(back.max_abs_diff(&f) < 1e-13);
        }

        #[test]
        fn fast_product_matches_oracle(a in arb_field(9), b in arb_field(9)) {
            let fast = fast_product(&a, &b, 9);
            let slow = convolve_oracle(&a, &b);
            prop_assert!(fast.max_abs_diff(&slow) <= 1e-12);
        }
    }
}
