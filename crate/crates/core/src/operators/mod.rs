//! Bilinear and trilinear Fourier multipliers of the normal form.
//!
//! Conventions: `N(u, v)` is the gauged quadratic nonlinearity
//! `d/dx <nabla>^{-s} [<nabla>^s u <nabla>^s v]`, `T` is the bilinear normal
//! form whose Airy derivative reproduces `N`, and the trilinear term
//! `T(N(v, v), v)` splits into a non-resonant sum and an explicit resonant
//! diagonal term.

mod scan;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use scan::{multiplier_sup, write_scan_csv, MultiplierKind, MultiplierScan};

use crate::error::{Error, Result};
use crate::spectrum::{bracket, ProductPlan, SobolevIndex, SpectralField};

/// Normalization of `T` and of the resonant phase.
///
/// `c_t = -1/3` is the value for which `(d_t + d_xxx) T(u, v) - T(Lu, v) -
/// T(u, Lv) = N(u, v)` holds exactly; `c_r = 2 c_t` is then forced by the
/// resonant ODE. The nominal pair `(1, 2)` is kept as [`paper_mode`] so the
/// defect it causes can be measured.
///
/// [`paper_mode`]: NormalFormConstants::paper_mode
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormConstants {
    pub c_t: f64,
    pub c_r: f64,
}

impl NormalFormConstants {
    pub fn corrected() -> Self {
        NormalFormConstants {
            c_t: -1.0 / 3.0,
            c_r: -2.0 / 3.0,
        }
    }

    pub fn paper_mode() -> Self {
        NormalFormConstants { c_t: 1.0, c_r: 2.0 }
    }

    /// Any `c_t` with the derived phase constant `c_r = 2 c_t`.
    pub fn from_c_t(c_t: f64) -> Self {
        NormalFormConstants { c_t, c_r: 2.0 * c_t }
    }

    /// Arbitrary pair, including inconsistent ones (for defect studies).
    pub fn with_phase(c_t: f64, c_r: f64) -> Self {
        NormalFormConstants { c_t, c_r }
    }

    pub fn is_consistent(&self) -> bool {
        self.c_r == 2.0 * self.c_t
    }
}

impl Default for NormalFormConstants {
    fn default() -> Self {
        Self::corrected()
    }
}

pub(crate) fn check_same_mode(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.max_mode() != b.max_mode() {
        return Err(Error::ModeMismatch {
            left: a.max_mode(),
            right: b.max_mode(),
        });
    }
    Ok(())
}

pub(crate) fn require_real_mean_zero(v: &SpectralField) -> Result<()> {
    if !v.is_real_valued() {
        return Err(Error::NotRealValued {
            defect: v.conjugate_symmetry_defect(),
        });
    }
    if !v.is_mean_zero() {
        return Err(Error::NotMeanZero {
            mean: v.coeff(0).norm(),
        });
    }
    Ok(())
}

fn finish(mut out: SpectralField, real: bool) -> SpectralField {
    out.set_flags(false, true);
    if real {
        out.symmetrize_in_place();
    }
    out
}

/// `N(u, v)` on an explicit output band; exact (alias-free) for any band.
pub fn nonlinearity_n_band(
    u: &SpectralField,
    v: &SpectralField,
    s: SobolevIndex,
    out_mode: usize,
) -> SpectralField {
    let s = s.value();
    let gauge = |f: &SpectralField| f.apply_even_real_symbol(|xi| bracket(xi).powf(s));
    let mut plan = ProductPlan::for_bands(u.max_mode(), v.max_mode(), out_mode);
    let mut out = SpectralField::zeros(out_mode);
    let gu = gauge(u);
    if std::ptr::eq(u, v) {
        plan.square(gu.coeffs(), out.coeffs_mut());
    } else {
        plan.convolve(gu.coeffs(), gauge(v).coeffs(), out.coeffs_mut());
    }
    let k = out_mode as i64;
    for (c, xi) in out.coeffs_mut().iter_mut().zip(-k..=k) {
        *c *= Complex64::new(0.0, xi as f64 * bracket(xi).powf(-s));
    }
    finish(out, u.is_real_valued() && v.is_real_valued())
}

/// `N(u, v)^(xi) = i xi <xi>^{-s} sum_{xi1 + xi2 = xi} <xi1>^s <xi2>^s u(xi1) v(xi2)`.
/// The output is always mean-zero.
pub fn nonlinearity_n(u: &SpectralField, v: &SpectralField, s: SobolevIndex) -> Result<SpectralField> {
    check_same_mode(u, v)?;
    Ok(nonlinearity_n_band(u, v, s, u.max_mode()))
}

/// `T(u, v)` on an explicit output band.
pub fn normal_form_t_band(
    u: &SpectralField,
    v: &SpectralField,
    s: SobolevIndex,
    consts: NormalFormConstants,
    out_mode: usize,
) -> SpectralField {
    let s = s.value();
    // the symbol factors as (<xi1>^s / xi1)(<xi2>^s / xi2) c_t / <xi>^s
    let weigh = |f: &SpectralField| {
        f.apply_symbol(|xi| {
            if xi == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(bracket(xi).powf(s) / xi as f64, 0.0)
            }
        })
    };
    let mut plan = ProductPlan::for_bands(u.max_mode(), v.max_mode(), out_mode);
    let mut out = SpectralField::zeros(out_mode);
    let wu = weigh(u);
    if std::ptr::eq(u, v) {
        plan.square(wu.coeffs(), out.coeffs_mut());
    } else {
        plan.convolve(wu.coeffs(), weigh(v).coeffs(), out.coeffs_mut());
    }
    let k = out_mode as i64;
    for (c, xi) in out.coeffs_mut().iter_mut().zip(-k..=k) {
        *c *= consts.c_t * bracket(xi).powf(-s);
    }
    finish(out, u.is_real_valued() && v.is_real_valued())
}

/// `T(u, v)^(xi) = c_t sum_{xi1 + xi2 = xi, xi1 xi2 xi != 0}
/// <xi1>^s <xi2>^s / (<xi>^s xi1 xi2) u(xi1) v(xi2)`.
pub fn normal_form_t(
    u: &SpectralField,
    v: &SpectralField,
    s: SobolevIndex,
    consts: NormalFormConstants,
) -> Result<SpectralField> {
    check_same_mode(u, v)?;
    Ok(normal_form_t_band(u, v, s, consts, u.max_mode()))
}

/// `|i (xi1^3 + xi2^3 - (xi1 + xi2)^3) sigma_T - sigma_N|` at one pair, or
/// `None` when `xi1 xi2 (xi1 + xi2) = 0`.
pub fn airy_identity_residual_at(
    s: SobolevIndex,
    consts: NormalFormConstants,
    xi1: i64,
    xi2: i64,
) -> Option<f64> {
    let xi = xi1 + xi2;
    if xi1 == 0 || xi2 == 0 || xi == 0 {
        return None;
    }
    let s = s.value();
    let weight = bracket(xi1).powf(s) * bracket(xi2).powf(s) / bracket(xi).powf(s);
    let modulation = (xi1.pow(3) + xi2.pow(3) - xi.pow(3)) as f64;
    // i * modulation * sigma_T, with sigma_T = c_t * weight / (xi1 xi2)
    let lhs = consts.c_t * (modulation / (xi1 * xi2) as f64) * weight;
    let sigma_n = xi as f64 * weight;
    Some((lhs - sigma_n).abs())
}

/// Maximum of [`airy_identity_residual_at`] over all admissible pairs with
/// `|xi1|, |xi2| <= cutoff`.
pub fn airy_identity_residual(s: SobolevIndex, consts: NormalFormConstants, cutoff: i64) -> Result<f64> {
    if cutoff < 2 {
        return Err(Error::InvalidParameter(format!("cutoff must be >= 2, got {cutoff}")));
    }
    let mut worst = 0.0f64;
    for xi1 in -cutoff..=cutoff {
        for xi2 in -cutoff..=cutoff {
            if let Some(r) = airy_identity_residual_at(s, consts, xi1, xi2) {
                worst = worst.max(r);
            }
        }
    }
    Ok(worst)
}

/// `T(N(v, v), v)` truncated to `|xi| <= K`.
///
/// The intermediate `N(v, v)` is kept on the full band `2K` it occupies, so
/// the result equals the exact triple sum over `|xi_j| <= K`.
pub fn trilinear_full(v: &SpectralField, s: SobolevIndex, consts: NormalFormConstants) -> Result<SpectralField> {
    require_real_mean_zero(v)?;
    Ok(trilinear_unchecked(v, s, consts))
}

fn trilinear_unchecked(v: &SpectralField, s: SobolevIndex, consts: NormalFormConstants) -> SpectralField {
    let k = v.max_mode();
    let n = nonlinearity_n_band(v, v, s, 2 * k);
    normal_form_t_band(&n, v, s, consts, k)
}

/// Direct `O(K^2)` evaluation of `T(N(v, v), v)` from the two symbol sums,
/// without transforms. Reference for [`trilinear_full`] and the split.
pub fn trilinear_direct(v: &SpectralField, s: SobolevIndex, consts: NormalFormConstants) -> Result<SpectralField> {
    require_real_mean_zero(v)?;
    let k = v.max_mode() as i64;
    let s = s.value();
    let n: Vec<Complex64> = (-2 * k..=2 * k)
        .map(|xi| {
            let acc: Complex64 = ((xi - k).max(-k)..=(xi + k).min(k))
                .map(|xi1| bracket(xi1).powf(s) * bracket(xi - xi1).powf(s) * v.coeff(xi1) * v.coeff(xi - xi1))
                .sum();
            Complex64::new(0.0, xi as f64 * bracket(xi).powf(-s)) * acc
        })
        .collect();
    let out = SpectralField::from_fn(k as usize, |xi| {
        if xi == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let acc: Complex64 = (-k..=k)
            .filter(|&xi2| xi2 != 0 && xi2 != xi)
            .map(|xi2| {
                let xi1 = xi - xi2;
                let w = bracket(xi1).powf(s) * bracket(xi2).powf(s) / (bracket(xi).powf(s) * (xi1 * xi2) as f64);
                w * n[(xi1 + 2 * k) as usize] * v.coeff(xi2)
            })
            .sum();
        consts.c_t * acc
    });
    Ok(finish(out, true))
}

/// Coefficient of the resonant term: `res(v)^(xi) = rho(xi) |v(xi)|^2 v(xi)`
/// with `rho(xi) = c_t <xi>^{2s} / (i xi)`, and `rho(0) = 0`.
pub fn resonant_coefficient(xi: i64, s: SobolevIndex, consts: NormalFormConstants) -> Complex64 {
    if xi == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let w = bracket(xi).powf(2.0 * s.value());
    Complex64::new(0.0, -consts.c_t * w / xi as f64)
}

/// Output of [`split_trilinear`].
#[derive(Clone, Debug)]
pub struct TrilinearSplit {
    pub nonres: SpectralField,
    pub res: SpectralField,
}

/// Splits `T(N(v, v), v)` into the sum over non-resonant triples
/// (`(xi1+xi2)(xi2+xi3)(xi3+xi1) != 0`) and the diagonal resonant term.
///
/// The resonant triples form two families (`xi2 = -xi3` and `xi1 = -xi3`)
/// whose `xi3` sums are odd and cancel, leaving only their intersection
/// `xi1 = xi2 = xi, xi3 = -xi`. That collapse needs `v(-xi) = conj v(xi)`,
/// so non-real input is rejected.
pub fn split_trilinear(v: &SpectralField, s: SobolevIndex, consts: NormalFormConstants) -> Result<TrilinearSplit> {
    require_real_mean_zero(v)?;
    Ok(split_unchecked(v, s, consts))
}

pub(crate) fn split_unchecked(v: &SpectralField, s: SobolevIndex, consts: NormalFormConstants) -> TrilinearSplit {
    let k = v.max_mode() as i64;
    let two_s = 2.0 * s.value();
    let full = trilinear_unchecked(v, s, consts);

    // g(xi3) = <xi3>^{2s} v(-xi3) v(xi3) / (i xi3), summed over the resonant
    // families numerically (inclusion-exclusion), not by the cancellation.
    let g = |xi3: i64| -> Complex64 {
        if xi3 == 0 {
            return Complex64::new(0.0, 0.0);
        }
        bracket(xi3).powf(two_s) * v.coeff(-xi3) * v.coeff(xi3) / Complex64::new(0.0, xi3 as f64)
    };
    let g_total: Complex64 = (-k..=k).map(g).sum();

    let mut nonres = full.clone();
    let mut res = SpectralField::zeros(k as usize);
    for (i, xi) in (-k..=k).enumerate() {
        if xi == 0 {
            continue;
        }
        let vx = v.coeff(xi);
        // families A and B each contribute v(xi) * sum_{xi3 != 0, xi} g(xi3);
        // their intersection is counted once.
        let families = 2.0 * vx * (g_total - g(xi)) - vx * g(-xi);
        // full = -c_t * (sum with unit constant), so remove -c_t * families
        nonres.coeffs_mut()[i] += consts.c_t * families;
        res.coeffs_mut()[i] = resonant_coefficient(xi, s, consts) * vx.norm_sqr() * vx;
    }
    let real = v.is_real_valued();
    TrilinearSplit {
        nonres: finish(nonres, real),
        res: finish(res, real),
    }
}

/// `B(x, y, z) = |x+y+z|^2 (y+z) + x |y+z|^2 + x^2 conj(y+z) + |x|^2 (y+z)`,
/// which equals `|x+y+z|^2 (x+y+z) - |x|^2 x`.
pub fn b_form(x: Complex64, y: Complex64, z: Complex64) -> Complex64 {
    let a = y + z;
    (x + a).norm_sqr() * a + x * a.norm_sqr() + x * x * a.conj() + x.norm_sqr() * a
}
