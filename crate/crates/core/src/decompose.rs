//! The splitting `v = R[f] + h + w` along a trajectory.
//!
//! `h = T(v, v)` removes the quadratic interaction, `R[f]` carries the
//! resonant cubic interaction exactly, and `w` is what is left. All
//! quantities are in the gauged frame `v` (with `u = <nabla>^s v`), where the
//! expected regularity gains read: `h` one derivative smoother than `v`,
//! `w` half a derivative smoother.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    b_form, normal_form_t, require_real_mean_zero, resonant_coefficient, split_unchecked, NormalFormConstants,
};
use crate::resonant::ResonantFlow;
use crate::solver::{evolve, refine_check, RefineReport, SolverConfig, StabilityReport, Trajectory};
use crate::spectrum::{
    airy_phase, fit_tail_slope, hs_norm, sample_rough, shell_spectrum, RoughDataSpec, Shell, SobolevIndex,
    SpectralField,
};

/// Largest excluded fraction of an ensemble before the report is refused.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.2;

/// `h = T(v, v)`.
pub fn compute_h(v: &SpectralField, s: SobolevIndex, consts: NormalFormConstants) -> Result<SpectralField> {
    require_real_mean_zero(v)?;
    normal_form_t(v, v, s, consts)
}

/// The four components at every saved time of a trajectory.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub times: Vec<f64>,
    pub v: Vec<SpectralField>,
    pub r: Vec<SpectralField>,
    pub h: Vec<SpectralField>,
    pub w: Vec<SpectralField>,
}

pub fn decompose(traj: &Trajectory, consts: NormalFormConstants) -> Result<Decomposition> {
    let s = traj.config.s;
    let flow = ResonantFlow::new(traj.initial.clone(), s, consts)?;
    let parts: Vec<(SpectralField, SpectralField, SpectralField)> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, v)| {
            let r = flow.at(t);
            let h = compute_h(v, s, consts)?;
            let w = &(v - &r) - &h;
            Ok((r, h, w))
        })
        .collect::<Result<_>>()?;
    let mut out = Decomposition {
        times: traj.times.clone(),
        v: traj.states.clone(),
        r: Vec::with_capacity(parts.len()),
        h: Vec::with_capacity(parts.len()),
        w: Vec::with_capacity(parts.len()),
    };
    for (r, h, w) in parts {
        out.r.push(r);
        out.h.push(h);
        out.w.push(w);
    }
    Ok(out)
}

/// `w(t) = v(t) - R[f](t) - T(v(t), v(t))` at every saved time.
pub fn compute_w(traj: &Trajectory, consts: NormalFormConstants) -> Result<Vec<SpectralField>> {
    Ok(decompose(traj, consts)?.w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WResidualReport {
    /// `max |FD4(d_t w) - i xi^3 w - RHS| / max |RHS|` over interior frames
    /// and `|xi| <= K/2`; 0 when both are 0.
    pub relative: f64,
    pub absolute: f64,
    pub rhs_max: f64,
    /// Richardson estimate of the FD4 error alone (relative), from the
    /// stencil with doubled spacing; `None` with fewer than 9 frames.
    pub fd_error_estimate: Option<f64>,
    pub frames_checked: usize,
}

/// Checks `(d_t + d_xxx) w = -2 nonres(v) - 2 rho B(R, h, w)` along `traj`.
///
/// Time derivatives are fourth-order central differences of the
/// interaction-picture coefficients `e^{-i xi^3 t} w(t, xi)`, which removes
/// the stiff free phase before differencing. Saved frames must be equally
/// spaced.
pub fn w_equation_residual(traj: &Trajectory, consts: NormalFormConstants) -> Result<WResidualReport> {
    let n = traj.times.len();
    if n < 5 {
        return Err(Error::TooFewFrames { needed: 5, found: n });
    }
    let s = traj.config.s;
    let dec = decompose(traj, consts)?;
    let k = traj.config.max_mode;
    let band = (k / 2) as i64;
    let dt = traj.times[1] - traj.times[0];

    let interaction: Vec<SpectralField> = dec
        .times
        .iter()
        .zip(&dec.w)
        .map(|(&t, w)| w.apply_symbol(|xi| airy_phase(xi, t).conj()))
        .collect();
    let fd4 = |j: usize, h: usize, xi: i64| -> Complex64 {
        let c = |i: usize| interaction[i].coeff(xi);
        (c(j - 2 * h) - 8.0 * c(j - h) + 8.0 * c(j + h) - c(j + 2 * h)) / (12.0 * h as f64 * dt)
    };

    let frames: Vec<usize> = (2..n - 2).collect();
    let per_frame: Vec<(f64, f64, f64)> = frames
        .par_iter()
        .map(|&j| {
            let t = dec.times[j];
            let v = &dec.v[j];
            let nonres = split_unchecked(v, s, consts).nonres;
            let mut defect = 0.0f64;
            let mut rhs_max = 0.0f64;
            let mut fd_gap = 0.0f64;
            for xi in -band..=band {
                let rho = resonant_coefficient(xi, s, consts);
                let b = b_form(dec.r[j].coeff(xi), dec.h[j].coeff(xi), dec.w[j].coeff(xi));
                let rhs = -2.0 * nonres.coeff(xi) - 2.0 * rho * b;
                let phase = airy_phase(xi, t);
                let lhs = phase * fd4(j, 1, xi);
                defect = defect.max((lhs - rhs).norm());
                rhs_max = rhs_max.max(rhs.norm());
                if j >= 4 && j + 4 < n {
                    let coarse = phase * fd4(j, 2, xi);
                    fd_gap = fd_gap.max((coarse - lhs).norm() / 15.0);
                }
            }
            (defect, rhs_max, fd_gap)
        })
        .collect();

    let absolute = per_frame.iter().map(|p| p.0).fold(0.0, f64::max);
    let rhs_max = per_frame.iter().map(|p| p.1).fold(0.0, f64::max);
    let fd_gap = per_frame.iter().map(|p| p.2).fold(0.0, f64::max);
    let rel = |x: f64| if x == 0.0 { 0.0 } else { x / rhs_max };
    Ok(WResidualReport {
        relative: if rhs_max == 0.0 && absolute == 0.0 { 0.0 } else { rel(absolute) },
        absolute,
        rhs_max,
        fd_error_estimate: (n >= 9).then(|| rel(fd_gap)),
        frames_checked: frames.len(),
    })
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, std, n }
    }
}

pub const COMPONENTS: [&str; 4] = ["v", "R", "h", "w"];

/// Sobolev exponents of the time-maximal norms in reports.
pub const NORM_EXPONENTS: [f64; 3] = [0.0, 0.5, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub name: String,
    /// `max_t ||.||_{H^r}` for `r` in [`NORM_EXPONENTS`].
    pub norms: [f64; 3],
    /// Fitted tail slope at the final time.
    pub slope: f64,
    /// Shell spectrum at the final time (plot-ready).
    pub spectrum: Vec<Shell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub final_time: f64,
    pub components: Vec<ComponentSummary>,
    pub slope_v_initial: f64,
    /// `max_t ||h||_{H^1} / ||v||_{L^2}^2`.
    pub h_bound_ratio: f64,
    pub stability: StabilityReport,
}

impl SeedResult {
    pub fn slope(&self, name: &str) -> f64 {
        self.components
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.slope)
            .expect("known component")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedRun {
    pub seed: u64,
    pub reason: String,
    /// Measurements of a run that finished but failed the stability report.
    pub diagnostics: Option<SeedResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub frame: String,
    pub s: SobolevIndex,
    pub epsilon: f64,
    pub amplitude: f64,
    pub max_mode: usize,
    pub band: (usize, usize),
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    pub results: Vec<SeedResult>,
    pub excluded: Vec<ExcludedRun>,
    pub ensemble_size: usize,
    /// Ensemble statistics of each component's final slope, in
    /// [`COMPONENTS`] order.
    pub slopes: Vec<(String, Stat)>,
    /// `slope(v) - slope(w)`.
    pub gap_v_w: Stat,
    /// `slope(v) - slope(h)`.
    pub gap_v_h: Stat,
    pub h_bound_ratio: Stat,
    pub refine: Option<RefineReport>,
}

/// Default modulus amplitude of the rough data in the smoothing experiment.
pub const DEFAULT_SMOOTHING_AMPLITUDE: f64 = 0.1;

/// Default step of the smoothing experiment, `2.5e-3 / K`, which keeps the
/// stiffness report near 0.04 for the default amplitude.
pub fn default_smoothing_dt(max_mode: usize) -> f64 {
    2.5e-3 / max_mode as f64
}

/// Tail-slope band `[K/16, K/2]`.
pub fn default_band(max_mode: usize) -> (usize, usize) {
    (max_mode / 16, max_mode / 2)
}

fn summarize(name: &str, fields: &[SpectralField], band: (usize, usize)) -> Result<ComponentSummary> {
    let mut norms = [0.0f64; 3];
    for f in fields {
        for (n, r) in norms.iter_mut().zip(NORM_EXPONENTS) {
            *n = n.max(hs_norm(f, SobolevIndex::new(r)));
        }
    }
    let last = fields.last().expect("at least one frame");
    Ok(ComponentSummary {
        name: name.to_string(),
        norms,
        slope: fit_tail_slope(last, band.0, band.1)?,
        spectrum: shell_spectrum(last, band.0, band.1)?,
    })
}

/// Evolves and decomposes one seed. The caller decides what to do with runs
/// whose stability report is not clean.
pub fn decompose_seed(
    spec: &RoughDataSpec,
    config: &SolverConfig,
    band: (usize, usize),
) -> Result<SeedResult> {
    let f = sample_rough(spec)?;
    let traj = evolve(&f, config)?;
    summarize_trajectory(&traj, spec.seed, band)
}

/// Decomposes a finished trajectory and summarizes each component on `band`.
pub fn summarize_trajectory(traj: &Trajectory, seed: u64, band: (usize, usize)) -> Result<SeedResult> {
    let dec = decompose(traj, traj.config.consts)?;
    let components = [&dec.v, &dec.r, &dec.h, &dec.w]
        .iter()
        .zip(COMPONENTS)
        .map(|(fields, name)| summarize(name, fields, band))
        .collect::<Result<Vec<_>>>()?;
    let h_bound_ratio = dec
        .v
        .iter()
        .zip(&dec.h)
        .map(|(v, h)| {
            let l2 = hs_norm(v, SobolevIndex::ZERO);
            if l2 == 0.0 {
                0.0
            } else {
                hs_norm(h, SobolevIndex::new(1.0)) / (l2 * l2)
            }
        })
        .fold(0.0, f64::max);
    Ok(SeedResult {
        seed,
        final_time: traj.final_time(),
        components,
        slope_v_initial: fit_tail_slope(&traj.initial, band.0, band.1)?,
        h_bound_ratio,
        stability: traj.stability,
    })
}

/// Runs the smoothing experiment over `specs` (which must share `s`,
/// `epsilon`, `amplitude` and `max_mode`), seed-parallel.
///
/// Runs that blow up or are flagged by the stability report are excluded and
/// listed, with their measurements kept as diagnostics. The report is always
/// returned so it can be written out; [`DecompositionReport::check_exclusions`]
/// turns more than 20% excluded into an error. When `refine` is set, the
/// first seed is also run at `(dt/2, 2K)` and the difference on `|xi| <= K/2`
/// is recorded.
pub fn smoothing_report(specs: &[RoughDataSpec], config: &SolverConfig, refine: bool) -> Result<DecompositionReport> {
    let first = specs
        .first()
        .ok_or_else(|| Error::InvalidParameter("no seeds given".into()))?;
    if specs.iter().any(|sp| {
        sp.s != first.s || sp.epsilon != first.epsilon || sp.amplitude != first.amplitude || sp.max_mode != first.max_mode
    }) {
        return Err(Error::InvalidParameter("all specs must share s, epsilon, amplitude and K".into()));
    }
    if first.max_mode != config.max_mode || first.s != config.s {
        return Err(Error::InvalidParameter("specs and solver config disagree on s or K".into()));
    }
    let band = default_band(config.max_mode);

    let (outcomes, refine) = rayon::join(
        || {
            specs
                .par_iter()
                .map(|sp| decompose_seed(sp, config, band))
                .collect::<Vec<_>>()
        },
        || {
            refine.then(|| sample_rough(first).and_then(|f| refine_check(&f, config)))
                .transpose()
        },
    );
    let refine = refine?;

    let mut results = Vec::new();
    let mut excluded = Vec::new();
    for (sp, outcome) in specs.iter().zip(outcomes) {
        match outcome {
            Ok(r) if r.stability.ok() => results.push(r),
            Ok(r) => excluded.push(ExcludedRun {
                seed: sp.seed,
                reason: exclusion_reason(&r.stability),
                diagnostics: Some(r),
            }),
            Err(e @ (Error::BlowUp { .. } | Error::TooFewShells { .. })) => excluded.push(ExcludedRun {
                seed: sp.seed,
                reason: e.to_string(),
                diagnostics: None,
            }),
            Err(e) => return Err(e),
        }
    }

    let slope_stat = |name: &str| Stat::of(&results.iter().map(|r| r.slope(name)).collect::<Vec<_>>());
    let report = DecompositionReport {
        frame: "gauged variable v, with u = <nabla>^s v".into(),
        s: first.s,
        epsilon: first.epsilon,
        amplitude: first.amplitude,
        max_mode: config.max_mode,
        band,
        seeds: specs.iter().map(|sp| sp.seed).collect(),
        solver: config.clone(),
        ensemble_size: results.len(),
        slopes: COMPONENTS.iter().map(|&c| (c.to_string(), slope_stat(c))).collect(),
        gap_v_w: Stat::of(&results.iter().map(|r| r.slope("v") - r.slope("w")).collect::<Vec<_>>()),
        gap_v_h: Stat::of(&results.iter().map(|r| r.slope("v") - r.slope("h")).collect::<Vec<_>>()),
        h_bound_ratio: Stat::of(&results.iter().map(|r| r.h_bound_ratio).collect::<Vec<_>>()),
        results,
        excluded,
        refine,
    };
    Ok(report)
}

fn exclusion_reason(st: &StabilityReport) -> String {
    let mut parts = Vec::new();
    if !st.stable() {
        parts.push(format!("stiffness {:.3} above {}", st.max_stiffness, st.stiffness_limit));
    }
    if !st.resolved() {
        parts.push(format!(
            "under-resolved: tail grew from {:e} to {:e}",
            st.tail_initial, st.tail_max
        ));
    }
    parts.join("; ")
}

impl DecompositionReport {
    pub fn check_exclusions(&self) -> Result<()> {
        let total = self.seeds.len();
        if self.results.is_empty() || self.excluded.len() as f64 > MAX_EXCLUDED_FRACTION * total as f64 {
            return Err(Error::TooManyExcluded {
                excluded: self.excluded.len(),
                total,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per seed, component and metric: `seed,component,metric,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["seed", "component", "metric", "value"])?;
        for r in &self.results {
            for c in &r.components {
                for (norm, e) in c.norms.iter().zip(NORM_EXPONENTS) {
                    csv.write_record([
                        r.seed.to_string(),
                        c.name.clone(),
                        format!("max_t_norm_H{e}"),
                        format!("{norm:e}"),
                    ])?;
                }
                csv.write_record([r.seed.to_string(), c.name.clone(), "tail_slope".into(), format!("{:e}", c.slope)])?;
            }
            csv.write_record([r.seed.to_string(), "v".into(), "tail_slope_initial".into(), format!("{:e}", r.slope_v_initial)])?;
            csv.write_record([r.seed.to_string(), "h".into(), "h_bound_ratio".into(), format!("{:e}", r.h_bound_ratio)])?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Plot-ready shell spectra: `seed,component,log_center,log_rms,count`.
    pub fn write_spectra_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["seed", "component", "log_center", "log_rms", "count"])?;
        for r in &self.results {
            for c in &r.components {
                for sh in &c.spectrum {
                    csv.write_record([
                        r.seed.to_string(),
                        c.name.clone(),
                        format!("{:e}", sh.center.ln()),
                        format!("{:e}", sh.rms.ln()),
                        sh.count.to_string(),
                    ])?;
                }
            }
        }
        csv.flush()?;
        Ok(())
    }
}
