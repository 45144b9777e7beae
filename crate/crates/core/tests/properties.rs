//! Property tests against independent brute-force oracles.

use kdv_normal_form::operators::{
    airy_identity_residual_at, b_form, multiplier_sup, nonlinearity_n, normal_form_t, split_trilinear,
    trilinear_full, MultiplierKind, NormalFormConstants,
};
use kdv_normal_form::resonant::ResonantFlow;
use kdv_normal_form::spectrum::{
    bessel_power, bracket, convolve_oracle, fast_product, fit_tail_slope, hs_norm, SobolevIndex, SpectralField,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn arb_real_field(max_k: usize) -> impl Strategy<Value = SpectralField> {
    (1..=max_k).prop_flat_map(|k| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), k).prop_map(move |c| {
            SpectralField::real_from_positive(k, |xi| Complex64::new(c[xi as usize - 1].0, c[xi as usize - 1].1))
        })
    })
}

fn arb_complex_field(k: usize) -> impl Strategy<Value = SpectralField> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * k + 1).prop_map(move |c| {
        SpectralField::from_fn(k, |xi| {
            let (re, im) = c[(xi + k as i64) as usize];
            Complex64::new(re, im)
        })
    })
}

/// `T(u, v)` straight from its symbol.
fn t_oracle(u: &SpectralField, v: &SpectralField, s: f64, c_t: f64) -> SpectralField {
    let k = u.max_mode() as i64;
    SpectralField::from_fn(k as usize, |xi| {
        if xi == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for xi1 in -k..=k {
            let xi2 = xi - xi1;
            if xi1 == 0 || xi2 == 0 || xi2.abs() > k {
                continue;
            }
            acc += bracket(xi1).powf(s) * bracket(xi2).powf(s) / (bracket(xi).powf(s) * (xi1 * xi2) as f64)
                * u.coeff(xi1)
                * v.coeff(xi2);
        }
        c_t * acc
    })
}

/// `N(u, v)` straight from its symbol.
fn n_oracle(u: &SpectralField, v: &SpectralField, s: f64) -> SpectralField {
    let k = u.max_mode() as i64;
    SpectralField::from_fn(k as usize, |xi| {
        let mut acc = Complex64::new(0.0, 0.0);
        for xi1 in -k..=k {
            let xi2 = xi - xi1;
            if xi2.abs() > k {
                continue;
            }
            acc += bracket(xi1).powf(s) * bracket(xi2).powf(s) * u.coeff(xi1) * v.coeff(xi2);
        }
        Complex64::new(0.0, xi as f64 * bracket(xi).powf(-s)) * acc
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_product_matches_direct_convolution(a in arb_complex_field(12), b in arb_complex_field(12)) {
        let fast = fast_product(&a, &b, 12);
        let direct = convolve_oracle(&a, &b);
        prop_assert!(fast.max_abs_diff(&direct) <= 1e-13);
    }

    #[test]
    fn n_matches_symbol_sum(u in arb_complex_field(10), v in arb_complex_field(10), s in 0.0f64..0.5) {
        let s_idx = SobolevIndex::new(s);
        let fast = nonlinearity_n(&u, &v, s_idx).unwrap();
        prop_assert!(fast.max_abs_diff(&n_oracle(&u, &v, s)) <= 1e-12);
        prop_assert_eq!(fast.coeff(0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn t_matches_symbol_sum_and_is_symmetric(u in arb_complex_field(10), v in arb_complex_field(10), s in 0.0f64..0.5) {
        let s_idx = SobolevIndex::new(s);
        let consts = NormalFormConstants::default();
        let uv = normal_form_t(&u, &v, s_idx, consts).unwrap();
        let vu = normal_form_t(&v, &u, s_idx, consts).unwrap();
        prop_assert!(uv.max_abs_diff(&t_oracle(&u, &v, s, consts.c_t)) <= 1e-13);
        prop_assert!(uv.max_abs_diff(&vu) <= 1e-14);
    }

    #[test]
    fn real_inputs_give_real_outputs(v in arb_real_field(16), s in 0.0f64..0.5) {
        let s_idx = SobolevIndex::new(s);
        let consts = NormalFormConstants::default();
        prop_assert!(nonlinearity_n(&v, &v, s_idx).unwrap().is_real_valued());
        prop_assert!(normal_form_t(&v, &v, s_idx, consts).unwrap().is_real_valued());
        let split = split_trilinear(&v, s_idx, consts).unwrap();
        prop_assert!(split.nonres.is_real_valued() && split.res.is_real_valued());
    }

    #[test]
    fn split_is_additive(v in arb_real_field(16), s in 0.0f64..0.5) {
        let s_idx = SobolevIndex::new(s);
        let consts = NormalFormConstants::default();
        let split = split_trilinear(&v, s_idx, consts).unwrap();
        let full = trilinear_full(&v, s_idx, consts).unwrap();
        prop_assert!((&split.nonres + &split.res).max_abs_diff(&full) <= 1e-11);
    }

    #[test]
    fn airy_identity_holds_pointwise(xi1 in -500i64..500, xi2 in -500i64..500, s in 0.0f64..0.5) {
        let consts = NormalFormConstants::default();
        if let Some(r) = airy_identity_residual_at(SobolevIndex::new(s), consts, xi1, xi2) {
            let scale = (xi1 + xi2).abs() as f64 * bracket(xi1).powf(s) * bracket(xi2).powf(s);
            prop_assert!(r <= 1e-14 * scale);
        }
    }

    #[test]
    fn b_form_identity(x in (-1e3f64..1e3, -1e3f64..1e3), y in (-1e3f64..1e3, -1e3f64..1e3), z in (-1e3f64..1e3, -1e3f64..1e3)) {
        let (x, y, z) = (Complex64::new(x.0, x.1), Complex64::new(y.0, y.1), Complex64::new(z.0, z.1));
        let sum = x + y + z;
        let direct = sum.norm_sqr() * sum - x.norm_sqr() * x;
        let scale = (x.norm() + y.norm() + z.norm()).powi(3);
        prop_assert!((b_form(x, y, z) - direct).norm() <= 1e-14 * scale);
    }

    #[test]
    fn hs_norm_scales_and_orders(v in arb_real_field(20), a in -5.0f64..5.0, s in 0.0f64..1.0) {
        let s_idx = SobolevIndex::new(s);
        let n = hs_norm(&v, s_idx);
        prop_assert!((hs_norm(&v.scaled(a), s_idx) - a.abs() * n).abs() <= 1e-12 * n.max(1.0));
        prop_assert!(hs_norm(&v, SobolevIndex::ZERO) <= n * (1.0 + 1e-15));
        prop_assert!((hs_norm(&bessel_power(&v, s), SobolevIndex::ZERO) - n).abs() <= 1e-12 * n.max(1.0));
    }

    #[test]
    fn resonant_flow_preserves_moduli_and_reality(v in arb_real_field(24), t in -3.0f64..3.0, s in 0.0f64..0.5) {
        let v = kdv_normal_form::spectrum::project_mean_zero(&v);
        let flow = ResonantFlow::new(v.clone(), SobolevIndex::new(s), NormalFormConstants::default()).unwrap();
        let r = flow.at(t);
        prop_assert!(r.is_real_valued() && r.is_mean_zero());
        for xi in r.frequencies() {
            prop_assert!((r.coeff(xi).norm() - v.coeff(xi).norm()).abs() <= 4.0 * f64::EPSILON * v.coeff(xi).norm());
        }
        prop_assert!(flow.residual(t) <= 1e-12);
    }

    // shell averaging over integers biases the fit slightly, more at steep slopes
    #[test]
    fn pure_power_law_has_its_slope(p in -2.0f64..0.0) {
        let f = SpectralField::real_from_positive(512, |xi| Complex64::new(bracket(xi).powf(p), 0.0));
        let slope = fit_tail_slope(&f, 32, 256).unwrap();
        prop_assert!((slope - p).abs() <= 0.02, "slope {} for {}", slope, p);
    }
}

#[test]
fn multiplier_suprema_match_direct_enumeration() {
    let s = 0.3;
    let eps = 0.1;
    let scan = multiplier_sup(MultiplierKind::M, SobolevIndex::new(s), 0.01, eps, &[5, 20]).unwrap();
    for (i, &c) in [5i64, 20].iter().enumerate() {
        let mut best = 0.0f64;
        for xi1 in -c..=c {
            for xi2 in -c..=c {
                let xi = xi1 + xi2;
                if xi1 == 0 || xi2 == 0 || xi == 0 || xi2.abs() > xi1.abs() {
                    continue;
                }
                let m = bracket(xi1).powf(s) * bracket(xi2).powf(s) * bracket(xi).powf(1.0 - s)
                    / (xi1.abs() as f64 * (xi2.abs() as f64).powf(0.5 - eps));
                best = best.max(m);
            }
        }
        assert!((scan.sups[i] - best).abs() <= 1e-12 * best);
    }
}
