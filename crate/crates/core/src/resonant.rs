//! The explicit resonant flow `R[f]` and its Lipschitz dependence on `f`.
//!
//! `R[f]` solves the resonant part of the cubic equation,
//! `(d_t + d_xxx) R = -2 sum_xi rho(xi) |R(xi)|^2 R(xi) e^{i xi x}` with
//! `R(0) = f`, where `rho` is [`resonant_coefficient`]. Because the right
//! side only rotates each mode, moduli are conserved and the solution is
//! `R(t, xi) = f(xi) exp(i c_r <xi>^{2s} |f(xi)|^2 t / xi) exp(i xi^3 t)`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{require_real_mean_zero, resonant_coefficient, NormalFormConstants};
use crate::spectrum::{airy_phase, bessel_power, bracket, hs_norm, SobolevIndex, SpectralField};

/// Time samples per unit time used when the caller does not choose a grid.
pub const DEFAULT_SAMPLES_PER_UNIT_TIME: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct ResonantFlow {
    f: SpectralField,
    s: SobolevIndex,
    consts: NormalFormConstants,
}

impl ResonantFlow {
    /// `f` must be real-valued and mean-zero.
    pub fn new(f: SpectralField, s: SobolevIndex, consts: NormalFormConstants) -> Result<Self> {
        require_real_mean_zero(&f)?;
        Ok(ResonantFlow { f, s, consts })
    }

    pub fn initial(&self) -> &SpectralField {
        &self.f
    }

    pub fn s(&self) -> SobolevIndex {
        self.s
    }

    pub fn consts(&self) -> NormalFormConstants {
        self.consts
    }

    /// Angular speed of the nonlinear (resonant) part of the phase at `xi`.
    pub fn resonant_rate(&self, xi: i64) -> f64 {
        if xi == 0 {
            return 0.0;
        }
        self.consts.c_r * bracket(xi).powf(2.0 * self.s.value()) * self.f.coeff(xi).norm_sqr() / xi as f64
    }

    /// Total phase speed `xi^3 + resonant_rate(xi)` at `xi`.
    pub fn phase_rate(&self, xi: i64) -> f64 {
        (xi * xi * xi) as f64 + self.resonant_rate(xi)
    }

    pub fn phase_speed_report(&self) -> PhaseSpeedReport {
        let k = self.f.max_mode() as i64;
        let max_total = (1..=k).map(|xi| self.phase_rate(xi).abs()).fold(0.0, f64::max);
        let max_resonant = (1..=k).map(|xi| self.resonant_rate(xi).abs()).fold(0.0, f64::max);
        PhaseSpeedReport {
            max_total,
            max_resonant,
        }
    }

    /// `R[f](t)`.
    pub fn at(&self, t: f64) -> SpectralField {
        SpectralField::real_from_positive(self.f.max_mode(), |xi| {
            let c = self.f.coeff(xi);
            c * Complex64::from_polar(1.0, self.resonant_rate(xi) * t) * airy_phase(xi, t)
        })
    }

    /// `R[f](t)` without the free Airy factor; its difference between two
    /// flows has the same moduli as the difference of the full flows.
    fn interaction_picture(&self, t: f64) -> SpectralField {
        SpectralField::real_from_positive(self.f.max_mode(), |xi| {
            self.f.coeff(xi) * Complex64::from_polar(1.0, self.resonant_rate(xi) * t)
        })
    }

    /// Max over `xi` of `|d/dt R + (i xi)^3 R + 2 rho |R|^2 R|` at time `t`.
    ///
    /// The time derivative of the closed form is `i (xi^3 + rate) R`; the
    /// Airy part cancels against `(i xi)^3 R` symbolically, so the remaining
    /// defect is `|i rate R + 2 rho |R|^2 R|`, which vanishes identically iff
    /// `c_r = 2 c_t`.
    pub fn residual(&self, t: f64) -> f64 {
        let r = self.at(t);
        r.frequencies()
            .filter(|&xi| xi != 0)
            .map(|xi| {
                let rh = r.coeff(xi);
                let lhs = Complex64::new(0.0, self.resonant_rate(xi)) * rh;
                let rhs = -2.0 * resonant_coefficient(xi, self.s, self.consts) * rh.norm_sqr() * rh;
                (lhs - rhs).norm()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpeedReport {
    /// `max_xi |xi^3 + c_r <xi>^{2s} |f(xi)|^2 / xi|`.
    pub max_total: f64,
    /// `max_xi |c_r <xi>^{2s} |f(xi)|^2 / xi|`, the only part that does not
    /// cancel in differences of two flows.
    pub max_resonant: f64,
}

pub fn resonant_flow(flow: &ResonantFlow, t: f64) -> SpectralField {
    flow.at(t)
}

pub fn resonant_residual(flow: &ResonantFlow, t: f64) -> f64 {
    flow.residual(t)
}

/// `<nabla>^s R[<nabla>^{-s} u0](t)`: the resonant flow read in the
/// original (ungauged) variable.
pub fn conjugated_flow(u0: &SpectralField, s: SobolevIndex, consts: NormalFormConstants, t: f64) -> Result<SpectralField> {
    let f = bessel_power(u0, -s.value());
    let flow = ResonantFlow::new(f, s, consts)?;
    Ok(bessel_power(&flow.at(t), s.value()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRatio {
    pub ratio: f64,
    pub argmax_t: f64,
}

/// Number of equispaced samples on `[0, horizon]` at the default density.
pub fn default_time_samples(horizon: f64) -> usize {
    ((DEFAULT_SAMPLES_PER_UNIT_TIME as f64 * horizon).ceil() as usize + 1).max(2)
}

/// `max_t ||R[f](t) - R[g](t)||_{H^gamma} / ||f - g||_{H^gamma}` over
/// `n_times` equispaced `t` in `[0, horizon]` (both ends included).
pub fn lipschitz_ratio(
    f: &SpectralField,
    g: &SpectralField,
    gamma: f64,
    s: SobolevIndex,
    consts: NormalFormConstants,
    horizon: f64,
    n_times: usize,
) -> Result<LipschitzRatio> {
    if n_times < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 time samples, got {n_times}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    crate::operators::check_same_mode(f, g)?;
    let gamma_idx = SobolevIndex::new(gamma);
    let denom = hs_norm(&(f - g), gamma_idx);
    if denom == 0.0 {
        return Err(Error::IdenticalInputs);
    }
    let rf = ResonantFlow::new(f.clone(), s, consts)?;
    let rg = ResonantFlow::new(g.clone(), s, consts)?;
    let mut best = LipschitzRatio {
        ratio: f64::NEG_INFINITY,
        argmax_t: 0.0,
    };
    for j in 0..n_times {
        let t = horizon * j as f64 / (n_times - 1) as f64;
        let diff = &rf.interaction_picture(t) - &rg.interaction_picture(t);
        let ratio = hs_norm(&diff, gamma_idx) / denom;
        if ratio > best.ratio {
            best = LipschitzRatio { ratio, argmax_t: t };
        }
    }
    Ok(best)
}

/// `f + separation * d / ||d||_{H^gamma}`: a pair at prescribed `H^gamma`
/// distance along the direction `d`.
pub fn perturbed_pair(f: &SpectralField, direction: &SpectralField, separation: f64, gamma: f64) -> Result<SpectralField> {
    crate::operators::check_same_mode(f, direction)?;
    require_real_mean_zero(direction)?;
    let norm = hs_norm(direction, SobolevIndex::new(gamma));
    if norm == 0.0 {
        return Err(Error::InvalidParameter("perturbation direction is zero".into()));
    }
    Ok(f + &direction.scaled(separation / norm))
}

/// One row of a Lipschitz experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRecord {
    pub seed_f: u64,
    pub seed_g: u64,
    pub gamma: f64,
    pub s: f64,
    pub horizon: f64,
    pub ratio: f64,
    pub argmax_t: f64,
    pub separation: f64,
}

/// Columns `seed_f,seed_g,gamma,s,horizon,ratio,argmax_t,separation`.
pub fn write_lipschitz_csv<W: Write>(w: W, records: &[LipschitzRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in records {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{sample_rough, RoughDataSpec};

    fn rough(seed: u64, k: usize, amplitude: f64) -> SpectralField {
        sample_rough(&RoughDataSpec {
            s: SobolevIndex::new(0.4),
            epsilon: 0.01,
            amplitude,
            seed,
            max_mode: k,
        })
        .unwrap()
    }

    #[test]
    fn initial_time_is_identity() {
        let f = rough(1, 32, 0.7);
        let flow = ResonantFlow::new(f.clone(), SobolevIndex::new(0.4), NormalFormConstants::default()).unwrap();
        assert_eq!(flow.at(0.0), f);
    }

    #[test]
    fn moduli_and_reality_preserved() {
        let f = rough(2, 64, 1.3);
        let flow = ResonantFlow::new(f.clone(), SobolevIndex::new(0.3), NormalFormConstants::default()).unwrap();
        for t in [0.01, 0.7, 5.0] {
            let r = flow.at(t);
            assert!(r.is_real_valued() && r.is_mean_zero());
            for xi in r.frequencies() {
                assert!((r.coeff(xi).norm() - f.coeff(xi).norm()).abs() <= 1e-15 * f.coeff(xi).norm().max(1e-300));
            }
        }
    }

    #[test]
    fn single_mode_phase_in_paper_mode() {
        let a = 0.3;
        let f = SpectralField::real_from_positive(4, |xi| Complex64::new(if xi == 1 { a } else { 0.0 }, 0.0));
        let flow = ResonantFlow::new(f, SobolevIndex::ZERO, NormalFormConstants::paper_mode()).unwrap();
        let t = 0.37;
        let expected = a * Complex64::from_polar(1.0, (1.0 + 2.0 * a * a) * t);
        assert!((flow.at(t).coeff(1) - expected).norm() < 1e-15);
    }

    #[test]
    fn residual_vanishes_iff_constants_consistent() {
        let f = rough(3, 64, 1.0);
        let s = SobolevIndex::new(0.4);
        let good = ResonantFlow::new(f.clone(), s, NormalFormConstants::default()).unwrap();
        for t in [0.0, 0.3, 1.7] {
            assert!(good.residual(t) <= 1e-12, "t={t}: {}", good.residual(t));
        }
        let c_t = -1.0 / 3.0;
        let bad = ResonantFlow::new(f.clone(), s, NormalFormConstants::with_phase(c_t, 2.0 * c_t + 0.1)).unwrap();
        let predicted = f
            .frequencies()
            .filter(|&xi| xi != 0)
            .map(|xi| 0.1 * bracket(xi).powf(0.8) * f.coeff(xi).norm().powi(3) / xi.abs() as f64)
            .fold(0.0, f64::max);
        assert!((bad.residual(0.3) - predicted).abs() <= 1e-12 * predicted);

        let zero = ResonantFlow::new(SpectralField::zeros(8), s, NormalFormConstants::default()).unwrap();
        assert_eq!(zero.residual(1.0), 0.0);
    }

    #[test]
    fn group_property_of_phases() {
        let f = rough(4, 32, 0.9);
        let flow = ResonantFlow::new(f, SobolevIndex::new(0.2), NormalFormConstants::default()).unwrap();
        let (t1, t2) = (0.25, 0.5);
        let a = flow.at(t1);
        let composed = a.apply_symbol(|xi| {
            Complex64::from_polar(1.0, flow.resonant_rate(xi) * t2) * airy_phase(xi, t2)
        });
        assert!(composed.max_abs_diff(&flow.at(t1 + t2)) < 1e-14);
    }

    #[test]
    fn lipschitz_ratio_matches_definition_and_is_one_at_zero() {
        let f = rough(5, 48, 0.8);
        let g = perturbed_pair(&f, &rough(6, 48, 1.0), 1e-2, 0.5).unwrap();
        let s = SobolevIndex::new(0.4);
        let c = NormalFormConstants::default();
        let at_zero = lipschitz_ratio(&f, &g, 0.5, s, c, 0.0, 2).unwrap();
        assert_eq!(at_zero.ratio, 1.0);
        assert_eq!(at_zero.argmax_t, 0.0);

        let res = lipschitz_ratio(&f, &g, 0.5, s, c, 1.0, 17).unwrap();
        let (rf, rg) = (ResonantFlow::new(f.clone(), s, c).unwrap(), ResonantFlow::new(g.clone(), s, c).unwrap());
        let gi = SobolevIndex::new(0.5);
        let literal = hs_norm(&(&rf.at(res.argmax_t) - &rg.at(res.argmax_t)), gi) / hs_norm(&(&f - &g), gi);
        assert!((literal - res.ratio).abs() < 1e-10);
        assert!(res.ratio >= 1.0);
    }

    #[test]
    fn lipschitz_rejects_identical_inputs() {
        let f = rough(7, 16, 1.0);
        assert!(matches!(
            lipschitz_ratio(&f, &f, 0.5, SobolevIndex::new(0.4), NormalFormConstants::default(), 1.0, 8),
            Err(Error::IdenticalInputs)
        ));
    }

    #[test]
    fn conjugated_flow_round_trip_at_zero() {
        let u0 = rough(8, 16, 1.0);
        let back = conjugated_flow(&u0, SobolevIndex::new(0.4), NormalFormConstants::default(), 0.0).unwrap();
        assert!(back.max_abs_diff(&u0) < 1e-15);
    }

    #[test]
    fn csv_header() {
        let rec = LipschitzRecord {
            seed_f: 1,
            seed_g: 2,
            gamma: 0.5,
            s: 0.4,
            horizon: 1.0,
            ratio: 1.25,
            argmax_t: 0.5,
            separation: 1e-3,
        };
        let mut buf = Vec::new();
        write_lipschitz_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "seed_f,seed_g,gamma,s,horizon,ratio,argmax_t,separation");
    }
}
