use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when certifying conjugate symmetry of a field
/// built from arbitrary coefficients.
pub const REALITY_TOLERANCE: f64 = 1e-12;

/// The Japanese bracket `<xi> = 1 + |xi|`.
#[inline]
pub fn bracket(xi: i64) -> f64 {
    1.0 + xi.unsigned_abs() as f64
}

/// A real regularity exponent. Any finite value is allowed.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub const ZERO: SobolevIndex = SobolevIndex(0.0);

    /// # Panics
    ///
    /// If `s` is not finite.
    pub fn new(s: f64) -> Self {
        assert!(s.is_finite(), "Sobolev index must be finite, got {s}");
        SobolevIndex(s)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<SobolevIndex> for f64 {
    fn from(s: SobolevIndex) -> f64 {
        s.0
    }
}

/// Fourier coefficients of a periodic function on the frequencies `-K..=K`.
///
/// A field represents `f(x) = sum_xi coeff(xi) e^{i xi x}` on the circle of
/// length `2 pi`, so `coeff(xi)` is the normalized Fourier coefficient
/// `(1/2pi) int f e^{-i xi x} dx`. Coefficients outside `[-K, K]` are zero.
///
/// The two flags are certified properties, not hints: a field flagged
/// real-valued satisfies `coeff(-xi) == conj(coeff(xi))` bit-for-bit, and a
/// field flagged mean-zero has `coeff(0) == 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    max_mode: usize,
    coeffs: Vec<Complex64>,
    real_valued: bool,
    mean_zero: bool,
}

impl SpectralField {
    pub fn zeros(max_mode: usize) -> Self {
        SpectralField {
            max_mode,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * max_mode + 1],
            real_valued: true,
            mean_zero: true,
        }
    }

    /// Wraps raw coefficients ordered from `-K` to `K`. No property is assumed.
    pub fn from_coeffs(max_mode: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = 2 * max_mode + 1;
        if coeffs.len() != expected {
            return Err(Error::CoefficientCount {
                max_mode,
                expected,
                found: coeffs.len(),
            });
        }
        Ok(SpectralField {
            max_mode,
            coeffs,
            real_valued: false,
            mean_zero: false,
        })
    }

    /// General (complex-valued) field from a coefficient function.
    pub fn from_fn(max_mode: usize, f: impl Fn(i64) -> Complex64) -> Self {
        let k = max_mode as i64;
        SpectralField {
            max_mode,
            coeffs: (-k..=k).map(f).collect(),
            real_valued: false,
            mean_zero: false,
        }
    }

    /// Real-valued, mean-zero field determined by its positive frequencies.
    /// `f` is called for `xi = 1..=K`; negative frequencies are conjugates.
    pub fn real_from_positive(max_mode: usize, f: impl Fn(i64) -> Complex64) -> Self {
        let mut out = SpectralField::zeros(max_mode);
        for xi in 1..=max_mode as i64 {
            let c = f(xi);
            out.set_pair(xi, c);
        }
        out
    }

    #[inline]
    fn index(&self, xi: i64) -> Option<usize> {
        let k = self.max_mode as i64;
        (-k..=k).contains(&xi).then(|| (xi + k) as usize)
    }

    /// Writes `c` at `xi > 0` and `conj(c)` at `-xi`.
    pub(crate) fn set_pair(&mut self, xi: i64, c: Complex64) {
        let k = self.max_mode as i64;
        self.coeffs[(k + xi) as usize] = c;
        self.coeffs[(k - xi) as usize] = c.conj();
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    /// Coefficient at `xi`; zero outside the stored band.
    #[inline]
    pub fn coeff(&self, xi: i64) -> Complex64 {
        self.index(xi)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// Coefficients ordered from `-K` to `K`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let k = self.max_mode as i64;
        -k..=k
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// `max_xi |coeff(-xi) - conj(coeff(xi))|`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        (0..=self.max_mode as i64)
            .map(|xi| (self.coeff(-xi) - self.coeff(xi).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Certifies the field as real-valued if its conjugate-symmetry defect is
    /// below `REALITY_TOLERANCE` relative to its largest coefficient, and
    /// then enforces the symmetry exactly from the nonnegative frequencies.
    pub fn into_real(mut self) -> Result<Self> {
        let defect = self.conjugate_symmetry_defect();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        if defect > REALITY_TOLERANCE * scale {
            return Err(Error::NotRealValued { defect });
        }
        self.symmetrize_in_place();
        Ok(self)
    }

    /// Rebuilds negative frequencies as conjugates of positive ones and drops
    /// the imaginary part of the mean. Sets the reality flag.
    pub(crate) fn symmetrize_in_place(&mut self) {
        let k = self.max_mode;
        for xi in 1..=k {
            self.coeffs[k - xi] = self.coeffs[k + xi].conj();
        }
        self.coeffs[k].im = 0.0;
        self.real_valued = true;
    }

    pub(crate) fn set_flags(&mut self, real_valued: bool, mean_zero: bool) {
        self.real_valued = real_valued;
        self.mean_zero = mean_zero;
        if mean_zero {
            self.coeffs[self.max_mode] = Complex64::new(0.0, 0.0);
        }
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Same function on a different band: zero-padded or truncated.
    pub fn resized(&self, max_mode: usize) -> SpectralField {
        let k = max_mode as i64;
        SpectralField {
            max_mode,
            coeffs: (-k..=k).map(|xi| self.coeff(xi)).collect(),
            real_valued: self.real_valued,
            mean_zero: self.mean_zero,
        }
    }

    /// Multiplies every coefficient by `symbol(xi)`.
    pub fn apply_symbol(&self, symbol: impl Fn(i64) -> Complex64) -> SpectralField {
        let k = self.max_mode as i64;
        SpectralField {
            max_mode: self.max_mode,
            coeffs: self
                .coeffs
                .iter()
                .zip(-k..=k)
                .map(|(c, xi)| c * symbol(xi))
                .collect(),
            real_valued: false,
            mean_zero: false,
        }
    }

    /// Multiplies every coefficient by the real even symbol `symbol(xi)`,
    /// which preserves both flags.
    pub fn apply_even_real_symbol(&self, symbol: impl Fn(i64) -> f64) -> SpectralField {
        let k = self.max_mode as i64;
        let mut out = SpectralField {
            max_mode: self.max_mode,
            coeffs: self
                .coeffs
                .iter()
                .zip(-k..=k)
                .map(|(c, xi)| c * symbol(xi))
                .collect(),
            real_valued: self.real_valued,
            mean_zero: self.mean_zero,
        };
        if out.real_valued {
            out.symmetrize_in_place();
        }
        out
    }

    /// `x -> -x`, i.e. `coeff(xi) -> coeff(-xi)`. Keeps both flags.
    pub fn reflected(&self) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.reverse();
        out
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    /// Largest coefficient difference on `|xi| <= band`.
    pub fn max_abs_diff_on(&self, other: &SpectralField, band: usize) -> f64 {
        let b = band as i64;
        (-b..=b)
            .map(|xi| (self.coeff(xi) - other.coeff(xi)).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.max_abs_diff_on(other, self.max_mode.max(other.max_mode))
    }

    /// Samples `f(x_j) = sum_xi coeff(xi) e^{i xi x_j}` at `x_j = 2 pi j / n`.
    /// Direct summation; intended for diagnostics, not inner loops.
    pub fn sample_physical(&self, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let x = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                self.frequencies()
                    .map(|xi| self.coeff(xi) * Complex64::from_polar(1.0, xi as f64 * x))
                    .sum()
            })
            .collect()
    }

    fn zip_with(
        &self,
        other: &SpectralField,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> SpectralField {
        let k = self.max_mode.max(other.max_mode);
        let ki = k as i64;
        SpectralField {
            max_mode: k,
            coeffs: (-ki..=ki)
                .map(|xi| op(self.coeff(xi), other.coeff(xi)))
                .collect(),
            real_valued: self.real_valued && other.real_valued,
            mean_zero: self.mean_zero && other.mean_zero,
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}
