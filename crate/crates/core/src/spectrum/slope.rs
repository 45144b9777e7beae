use serde::{Deserialize, Serialize};

use super::field::{bracket, SpectralField};
use crate::error::{Error, Result};

/// Shells are quarter octaves: a band `[K/16, K/2]` then holds twelve.
pub const SHELLS_PER_OCTAVE: usize = 4;

const MIN_SHELLS: usize = 8;

/// One shell of the log-log spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    /// Geometric mean of `<xi>` over the frequencies in the shell.
    pub center: f64,
    /// Root-mean-square of `|coeff(xi)|` over the shell.
    pub rms: f64,
    pub count: usize,
}

/// Groups `|coeff(xi)|`, `band_lo <= |xi| <= band_hi`, into shells of ratio
/// `2^{1/4}` starting at `band_lo`. Both signs of `xi` enter each shell.
/// Shells that contain no integer frequency are omitted.
pub fn shell_spectrum(field: &SpectralField, band_lo: usize, band_hi: usize) -> Result<Vec<Shell>> {
    let k = field.max_mode();
    if band_lo < 1 || band_lo >= band_hi || band_hi > k {
        return Err(Error::InvalidBand {
            lo: band_lo,
            hi: band_hi,
            max_mode: k,
            reason: "need 1 <= lo < hi <= K",
        });
    }
    let octaves = (band_hi as f64 / band_lo as f64).log2();
    let n_shells = (octaves * SHELLS_PER_OCTAVE as f64 - 1e-9).ceil().max(1.0) as usize;
    if n_shells < MIN_SHELLS {
        return Err(Error::InvalidBand {
            lo: band_lo,
            hi: band_hi,
            max_mode: k,
            reason: "fewer than 8 shells in band",
        });
    }
    let ratio = 2f64.powf(1.0 / SHELLS_PER_OCTAVE as f64);

    let mut sum_sq = vec![0.0; n_shells];
    let mut sum_log = vec![0.0; n_shells];
    let mut count = vec![0usize; n_shells];
    for m in band_lo..=band_hi {
        let idx = (((m as f64 / band_lo as f64).ln() / ratio.ln()) + 1e-12).floor() as usize;
        let idx = idx.min(n_shells - 1);
        let m = m as i64;
        for xi in [m, -m] {
            sum_sq[idx] += field.coeff(xi).norm_sqr();
            sum_log[idx] += bracket(xi).ln();
            count[idx] += 1;
        }
    }
    Ok((0..n_shells)
        .filter(|&i| count[i] > 0)
        .map(|i| Shell {
            center: (sum_log[i] / count[i] as f64).exp(),
            rms: (sum_sq[i] / count[i] as f64).sqrt(),
            count: count[i],
        })
        .collect())
}

/// Least-squares slope of `ln(shell rms)` against `ln(shell center)`.
/// Shells with zero energy are excluded from the fit.
pub fn fit_tail_slope(field: &SpectralField, band_lo: usize, band_hi: usize) -> Result<f64> {
    let points: Vec<(f64, f64)> = shell_spectrum(field, band_lo, band_hi)?
        .into_iter()
        .filter(|s| s.rms > 0.0)
        .map(|s| (s.center.ln(), s.rms.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::TooFewShells {
            found: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn power_law(k: usize, p: f64) -> SpectralField {
        SpectralField::real_from_positive(k, |xi| Complex64::from_polar(bracket(xi).powf(p), xi as f64))
    }

    #[test]
    fn exact_on_power_laws() {
        for (k, p) in [(512, -1.0), (512, -1.5), (1024, -0.51), (64, -2.0)] {
            let slope = fit_tail_slope(&power_law(k, p), k / 16, k).unwrap();
            assert!((slope - p).abs() < 0.02, "k={k} p={p} slope={slope}");
        }
    }

    #[test]
    fn flat_spectrum_has_zero_slope() {
        let f = SpectralField::real_from_positive(256, |xi| Complex64::from_polar(3.0, xi as f64));
        assert!(fit_tail_slope(&f, 16, 256).unwrap().abs() < 1e-12);
    }

    #[test]
    fn band_validation() {
        let f = power_law(64, -1.0);
        assert!(matches!(fit_tail_slope(&f, 0, 32), Err(Error::InvalidBand { .. })));
        assert!(matches!(fit_tail_slope(&f, 32, 65), Err(Error::InvalidBand { .. })));
        // only one octave: four shells
        assert!(matches!(fit_tail_slope(&f, 32, 64), Err(Error::InvalidBand { .. })));
    }

    #[test]
    fn too_few_nonzero_shells() {
        let f = SpectralField::real_from_positive(64, |xi| {
            Complex64::new(if xi == 5 || xi == 60 { 1.0 } else { 0.0 }, 0.0)
        });
        assert!(matches!(fit_tail_slope(&f, 4, 64), Err(Error::TooFewShells { found: 2 })));
    }

    #[test]
    fn shells_cover_band_once() {
        let shells = shell_spectrum(&power_law(128, -1.0), 8, 128).unwrap();
        let total: usize = shells.iter().map(|s| s.count).sum();
        assert_eq!(total, 2 * (128 - 8 + 1));
        assert!(shells.windows(2).all(|w| w[0].center < w[1].center));
    }
}
