//! Exact truncated convolutions: a transform-based fast path and the direct
//! O(K^2) reference sum it is checked against.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Grid size that makes the product of bands `ka` and `kb` alias-free on the
/// output band `kout`. Aliased images of the `ka + kb` wide product land at
/// least `size - ka - kb > kout` away from every kept mode.
pub fn transform_size(ka: usize, kb: usize, kout: usize) -> usize {
    (ka + kb + kout + 1).next_power_of_two().max(4)
}

/// Forward/inverse transforms on a fixed grid plus scratch buffers. Reused by
/// the solver so the inner loop does not allocate.
pub struct ProductPlan {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buf_a: Vec<Complex64>,
    buf_b: Vec<Complex64>,
}

impl ProductPlan {
    pub fn new(size: usize) -> Self {
        let (forward, inverse) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(size), p.plan_fft_inverse(size))
        });
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let zero = Complex64::new(0.0, 0.0);
        ProductPlan {
            size,
            forward,
            inverse,
            scratch: vec![zero; scratch_len],
            buf_a: vec![zero; size],
            buf_b: vec![zero; size],
        }
    }

    pub fn for_bands(ka: usize, kb: usize, kout: usize) -> Self {
        Self::new(transform_size(ka, kb, kout))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn scatter(size: usize, coeffs: &[Complex64], buf: &mut [Complex64]) {
        let k = (coeffs.len() - 1) / 2;
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (i, c) in coeffs.iter().enumerate() {
            let xi = i as i64 - k as i64;
            buf[xi.rem_euclid(size as i64) as usize] = *c;
        }
    }

    fn gather(&self, src: &[Complex64], out: &mut [Complex64]) {
        let kout = (out.len() - 1) / 2;
        let norm = 1.0 / self.size as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let xi = i as i64 - kout as i64;
            *o = src[xi.rem_euclid(self.size as i64) as usize] * norm;
        }
    }

    /// Physical samples of the field with coefficients `coeffs` (ordered
    /// `-K..=K`), written into the plan's first buffer.
    pub fn to_grid(&mut self, coeffs: &[Complex64]) -> &[Complex64] {
        Self::scatter(self.size, coeffs, &mut self.buf_a);
        self.inverse
            .process_with_scratch(&mut self.buf_a, &mut self.scratch);
        &self.buf_a
    }

    /// Exact truncated convolution of `a` and `b` into `out` (band given by
    /// `out.len()`). The plan must be at least `transform_size` for the bands.
    pub fn convolve(&mut self, a: &[Complex64], b: &[Complex64], out: &mut [Complex64]) {
        debug_assert!(
            self.size >= (a.len() + b.len() + out.len() - 3) / 2 + 1,
            "plan too small for requested bands"
        );
        Self::scatter(self.size, a, &mut self.buf_a);
        self.inverse
            .process_with_scratch(&mut self.buf_a, &mut self.scratch);
        Self::scatter(self.size, b, &mut self.buf_b);
        self.inverse
            .process_with_scratch(&mut self.buf_b, &mut self.scratch);
        for (x, y) in self.buf_a.iter_mut().zip(&self.buf_b) {
            *x *= y;
        }
        self.forward
            .process_with_scratch(&mut self.buf_a, &mut self.scratch);
        let src = std::mem::take(&mut self.buf_a);
        self.gather(&src, out);
        self.buf_a = src;
    }

    /// `convolve(a, a, out)` with one inverse transform instead of two.
    /// Returns the largest modulus of the physical samples of `a`.
    pub fn square(&mut self, a: &[Complex64], out: &mut [Complex64]) -> f64 {
        Self::scatter(self.size, a, &mut self.buf_a);
        self.inverse
            .process_with_scratch(&mut self.buf_a, &mut self.scratch);
        let mut peak = 0.0f64;
        for x in self.buf_a.iter_mut() {
            peak = peak.max(x.norm_sqr());
            *x = *x * *x;
        }
        self.forward
            .process_with_scratch(&mut self.buf_a, &mut self.scratch);
        let src = std::mem::take(&mut self.buf_a);
        self.gather(&src, out);
        self.buf_a = src;
        peak.sqrt()
    }
}

/// Transform-based product of two fields, exact on `|xi| <= out_mode`.
/// Flags: real if both inputs are real; mean-zero is not implied.
pub fn fast_product(a: &SpectralField, b: &SpectralField, out_mode: usize) -> SpectralField {
    let mut plan = ProductPlan::for_bands(a.max_mode(), b.max_mode(), out_mode);
    let mut out = SpectralField::zeros(out_mode);
    if std::ptr::eq(a, b) {
        plan.square(a.coeffs(), out.coeffs_mut());
    } else {
        plan.convolve(a.coeffs(), b.coeffs(), out.coeffs_mut());
    }
    let real = a.is_real_valued() && b.is_real_valued();
    out.set_flags(false, false);
    if real {
        out.symmetrize_in_place();
    }
    out
}

/// Direct convolution `c(xi) = sum_{xi1 + xi2 = xi} a(xi1) b(xi2)`,
/// truncated to the larger of the two input bands.
pub fn convolve_oracle(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let k = a.max_mode().max(b.max_mode()) as i64;
    let ka = a.max_mode() as i64;
    let kb = b.max_mode() as i64;
    let mut out = SpectralField::from_fn(k as usize, |xi| {
        let lo = (-ka).max(xi - kb);
        let hi = ka.min(xi + kb);
        (lo..=hi).map(|x1| a.coeff(x1) * b.coeff(xi - x1)).sum()
    });
    if a.is_real_valued() && b.is_real_valued() {
        out.symmetrize_in_place();
    }
    out
}
