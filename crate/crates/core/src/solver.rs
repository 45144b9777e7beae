//! Integrating-factor RK4 for the gauged equation `v_t + v_xxx = N(v, v)`.
//!
//! The gauge is `u = <nabla>^s v`: `u` solves the periodic KdV equation
//! `u_t + u_xxx = (u^2)_x`, so `||u||_{L^2} = ||v||_{H^s}` is conserved.
//! The Airy part is propagated exactly by the unitary factor
//! `e^{i xi^3 t}`; only the nonlinearity is discretized.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{require_real_mean_zero, NormalFormConstants};
use crate::spectrum::{airy_phase, bracket, hs_norm, io, transform_size, ProductPlan, SobolevIndex, SpectralField};

/// Sentinel for blow-up detection on the physical maximum of `v`. Arbitrary.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

/// Largest accepted value of `dt * K * max|<nabla>^s v|`. The linearized
/// nonlinear term has rate about `2 K max|<nabla>^s v|` and classical RK4 is
/// stable on the imaginary axis up to `2.8`, so this keeps a margin.
pub const STIFFNESS_LIMIT: f64 = 1.0;

/// Absolute floor below which the top half of the spectrum counts as empty.
pub const TAIL_FLOOR: f64 = 1e-10;

/// A run is flagged under-resolved when the top half of the spectrum grows
/// beyond this factor of its initial size (or of `TAIL_FLOOR`).
pub const TAIL_GROWTH_LIMIT: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub s: SobolevIndex,
    pub max_mode: usize,
    /// Requested step; the integrator uses [`exact_step`] of it.
    pub dt: f64,
    pub horizon: f64,
    pub save_every: usize,
    #[serde(default)]
    pub consts: NormalFormConstants,
    /// Drops the nonlinearity (free Airy flow). Test hook.
    #[serde(default)]
    pub linear_only: bool,
}

impl SolverConfig {
    pub fn new(s: SobolevIndex, max_mode: usize, dt: f64, horizon: f64) -> Self {
        SolverConfig {
            s,
            max_mode,
            dt,
            horizon,
            save_every: 1,
            consts: NormalFormConstants::default(),
            linear_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_mode == 0 {
            return Err(Error::InvalidParameter("max_mode must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.save_every == 0 {
            return Err(Error::InvalidParameter("save_every must be positive".into()));
        }
        Ok(())
    }

    /// The step actually taken.
    pub fn step(&self) -> f64 {
        exact_step(self.dt)
    }

    /// Total number of steps: the smallest multiple of `save_every` that
    /// reaches the horizon.
    pub fn n_steps(&self) -> usize {
        let raw = (self.horizon / self.step()).ceil() as usize;
        raw.div_ceil(self.save_every).max(1) * self.save_every
    }

    pub fn final_time(&self) -> f64 {
        self.n_steps() as f64 * self.step()
    }
}

/// Rounds `dt` down to `m 2^-p` with `512 <= m < 1024`.
///
/// Every time `n dt` is then exact in binary, so the free phase
/// `e^{i xi^3 n dt}` accumulated by the integrator and the one evaluated in
/// closed form at the saved time agree to rounding even for `xi^3 t ~ 1e9`.
pub fn exact_step(dt: f64) -> f64 {
    let quantum = 2f64.powi(dt.log2().floor() as i32 - 9);
    (dt / quantum).floor() * quantum
}

/// `min(0.1, ||f||_{L^2}^{-3})`; `0.1` for `f = 0`.
pub fn default_horizon(f: &SpectralField) -> f64 {
    let n = hs_norm(f, SobolevIndex::ZERO);
    if n == 0.0 {
        0.1
    } else {
        0.1f64.min(n.powi(-3))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// `max over stages of dt * K * max_x |<nabla>^s v|`.
    pub max_stiffness: f64,
    pub stiffness_limit: f64,
    /// `max_{|xi| > K/2} |v(xi)|` at `t = 0` and its maximum over saved times.
    pub tail_initial: f64,
    pub tail_max: f64,
    /// Largest physical `|v|` over saved times.
    pub max_physical: f64,
}

impl StabilityReport {
    pub fn stable(&self) -> bool {
        self.max_stiffness <= self.stiffness_limit
    }

    pub fn resolved(&self) -> bool {
        self.tail_max <= TAIL_GROWTH_LIMIT * self.tail_initial.max(TAIL_FLOOR)
    }

    pub fn ok(&self) -> bool {
        self.stable() && self.resolved()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub initial: SpectralField,
    pub stability: StabilityReport,
}

impl Trajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one time")
    }
}

/// The gauged nonlinearity with precomputed symbols and reusable buffers.
struct Nonlinearity {
    plan: ProductPlan,
    gauge: Vec<f64>,
    outer: Vec<Complex64>,
    gauged: Vec<Complex64>,
    peak: f64,
    linear_only: bool,
}

impl Nonlinearity {
    fn new(k: usize, s: f64, linear_only: bool) -> Self {
        let ki = k as i64;
        Nonlinearity {
            plan: ProductPlan::new(transform_size(k, k, k)),
            gauge: (-ki..=ki).map(|xi| bracket(xi).powf(s)).collect(),
            outer: (-ki..=ki)
                .map(|xi| Complex64::new(0.0, xi as f64 * bracket(xi).powf(-s)))
                .collect(),
            gauged: vec![Complex64::new(0.0, 0.0); 2 * k + 1],
            peak: 0.0,
            linear_only,
        }
    }

    fn eval(&mut self, v: &[Complex64], out: &mut [Complex64]) {
        if self.linear_only {
            out.fill(Complex64::new(0.0, 0.0));
            return;
        }
        for ((g, c), w) in self.gauged.iter_mut().zip(v).zip(&self.gauge) {
            *g = c * w;
        }
        let peak = self.plan.square(&self.gauged, out);
        self.peak = self.peak.max(peak);
        for (o, m) in out.iter_mut().zip(&self.outer) {
            *o *= m;
        }
    }
}

/// Rebuilds negative frequencies from positive ones and clears the mean.
fn enforce_real_mean_zero(v: &mut [Complex64]) {
    let k = (v.len() - 1) / 2;
    for xi in 1..=k {
        v[k - xi] = v[k + xi].conj();
    }
    v[k] = Complex64::new(0.0, 0.0);
}

fn tail(v: &SpectralField) -> f64 {
    let k = v.max_mode() as i64;
    v.frequencies()
        .filter(|xi| 2 * xi.abs() > k)
        .map(|xi| v.coeff(xi).norm())
        .fold(0.0, f64::max)
}

fn to_field(k: usize, coeffs: &[Complex64]) -> SpectralField {
    SpectralField::real_from_positive(k, |xi| coeffs[k + xi as usize])
}

/// Evolves `f` to `config.final_time()` and returns the saved states.
pub fn evolve(f: &SpectralField, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    require_real_mean_zero(f)?;
    if f.max_mode() != config.max_mode {
        return Err(Error::ModeMismatch {
            left: f.max_mode(),
            right: config.max_mode,
        });
    }
    let k = config.max_mode;
    let ki = k as i64;
    let dt = config.step();
    let half: Vec<Complex64> = (-ki..=ki).map(|xi| airy_phase(xi, dt / 2.0)).collect();
    let full: Vec<Complex64> = (-ki..=ki).map(|xi| airy_phase(xi, dt)).collect();
    let mut rhs = Nonlinearity::new(k, config.s.value(), config.linear_only);
    let mut grid = ProductPlan::new(transform_size(k, 0, 0));

    let n = 2 * k + 1;
    let zero = Complex64::new(0.0, 0.0);
    let mut v = f.coeffs().to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut stage = vec![zero; n];

    let mut times = vec![0.0];
    let mut states = vec![f.clone()];
    let tail_initial = tail(f);
    let mut tail_max = tail_initial;
    let mut max_physical = physical_max(&mut grid, &v);

    for step in 1..=config.n_steps() {
        rhs.eval(&v, &mut k1);
        for i in 0..n {
            stage[i] = half[i] * (v[i] + 0.5 * dt * k1[i]);
        }
        rhs.eval(&stage, &mut k2);
        for i in 0..n {
            stage[i] = half[i] * v[i] + 0.5 * dt * k2[i];
        }
        rhs.eval(&stage, &mut k3);
        for i in 0..n {
            stage[i] = full[i] * v[i] + dt * half[i] * k3[i];
        }
        rhs.eval(&stage, &mut k4);
        for i in 0..n {
            v[i] = full[i] * v[i]
                + dt / 6.0 * (full[i] * k1[i] + 2.0 * half[i] * (k2[i] + k3[i]) + k4[i]);
        }
        enforce_real_mean_zero(&mut v);

        let t = step as f64 * dt;
        if v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BlowUp {
                time: t,
                reason: "non-finite coefficient".into(),
            });
        }
        if step % config.save_every == 0 {
            let peak = physical_max(&mut grid, &v);
            if peak > BLOW_UP_THRESHOLD {
                return Err(Error::BlowUp {
                    time: t,
                    reason: format!("max |v| = {peak:e} exceeds {BLOW_UP_THRESHOLD:e}"),
                });
            }
            max_physical = max_physical.max(peak);
            let state = to_field(k, &v);
            tail_max = tail_max.max(tail(&state));
            times.push(t);
            states.push(state);
        }
    }

    Ok(Trajectory {
        config: config.clone(),
        times,
        states,
        initial: f.clone(),
        stability: StabilityReport {
            max_stiffness: dt * k as f64 * rhs.peak,
            stiffness_limit: STIFFNESS_LIMIT,
            tail_initial,
            tail_max,
            max_physical,
        },
    })
}

fn physical_max(plan: &mut ProductPlan, v: &[Complex64]) -> f64 {
    plan.to_grid(v).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedDiagnostics {
    /// `max_t |v(t, 0)|`.
    pub mean_drift: f64,
    /// `max_t | ||u(t)||_{L^2} / ||u(0)||_{L^2} - 1 |` with `u = <nabla>^s v`.
    pub l2_drift: f64,
}

pub fn conserved_diagnostics(traj: &Trajectory) -> ConservedDiagnostics {
    let s = traj.config.s;
    let initial = hs_norm(&traj.initial, s);
    let mean_drift = traj.states.iter().map(|v| v.coeff(0).norm()).fold(0.0, f64::max);
    let l2_drift = if initial == 0.0 {
        0.0
    } else {
        traj.states
            .iter()
            .map(|v| (hs_norm(v, s) / initial - 1.0).abs())
            .fold(0.0, f64::max)
    };
    ConservedDiagnostics { mean_drift, l2_drift }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub dt: f64,
    pub max_mode: usize,
    pub horizon: f64,
    /// Frequencies `|xi| <= band` are compared.
    pub band: usize,
    /// `max_{|xi| <= band} |v_{dt,K}(T) - v_{dt/2,2K}(T)|`.
    pub difference: f64,
    pub coarse_stability: StabilityReport,
    pub fine_stability: StabilityReport,
}

impl RefineReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.difference <= tolerance
    }
}

fn final_only(config: &SolverConfig) -> SolverConfig {
    let mut c = config.clone();
    c.save_every = 1;
    c.save_every = c.n_steps();
    c
}

/// Compares the run at `(dt, K)` with the run at `(dt/2, 2K)` on `|xi| <= K/2`.
pub fn refine_check(f: &SpectralField, config: &SolverConfig) -> Result<RefineReport> {
    let coarse = final_only(config);
    let mut fine = coarse.clone();
    fine.dt = config.step() / 2.0;
    fine.max_mode = 2 * config.max_mode;
    fine.horizon = coarse.final_time();
    let fine = final_only(&fine);
    let f2 = f.resized(fine.max_mode);
    let (a, b) = rayon::join(|| evolve(f, &coarse), || evolve(&f2, &fine));
    let (a, b) = (a?, b?);
    debug_assert_eq!(a.final_time(), b.final_time());
    let band = config.max_mode / 2;
    Ok(RefineReport {
        dt: config.step(),
        max_mode: config.max_mode,
        horizon: a.final_time(),
        band,
        difference: a.final_state().max_abs_diff_on(b.final_state(), band),
        coarse_stability: a.stability,
        fine_stability: b.stability,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionMapRatio {
    /// `max_t ||v_f(t) - v_g(t)||_{H^gamma} / ||f - g||_{H^gamma}` over saved times.
    pub ratio: f64,
    pub argmax_t: f64,
    pub stability_f: StabilityReport,
    pub stability_g: StabilityReport,
}

/// Evolves `f` and `g` with the same configuration and measures how far the
/// two trajectories separate relative to their initial distance.
pub fn solution_map_ratio(
    f: &SpectralField,
    g: &SpectralField,
    config: &SolverConfig,
    gamma: f64,
) -> Result<SolutionMapRatio> {
    let gamma = SobolevIndex::new(gamma);
    let denom = hs_norm(&(f - g), gamma);
    if denom == 0.0 {
        return Err(Error::IdenticalInputs);
    }
    let (a, b) = rayon::join(|| evolve(f, config), || evolve(g, config));
    let (a, b) = (a?, b?);
    let mut out = SolutionMapRatio {
        ratio: f64::NEG_INFINITY,
        argmax_t: 0.0,
        stability_f: a.stability,
        stability_g: b.stability,
    };
    for ((t, va), vb) in a.times.iter().zip(&a.states).zip(&b.states) {
        let r = hs_norm(&(va - vb), gamma) / denom;
        if r > out.ratio {
            out.ratio = r;
            out.argmax_t = *t;
        }
    }
    Ok(out)
}

/// Temporal self-convergence order from final states at `dt`, `dt/2`, `dt/4`:
/// `log2(|v_dt - v_dt/2| / |v_dt/2 - v_dt/4|)` in the max norm.
pub fn self_convergence_order(f: &SpectralField, config: &SolverConfig) -> Result<f64> {
    let finals: Vec<SpectralField> = [1.0, 0.5, 0.25]
        .par_iter()
        .map(|&r| {
            let mut c = config.clone();
            c.dt = config.step() * r;
            c.horizon = config.final_time();
            c.save_every = 1;
            evolve(f, &final_only(&c)).map(|t| t.final_state().clone())
        })
        .collect::<Result<_>>()?;
    let e1 = finals[0].max_abs_diff(&finals[1]);
    let e2 = finals[1].max_abs_diff(&finals[2]);
    Ok((e1 / e2).log2())
}

#[derive(Serialize, Deserialize)]
struct TrajectoryManifest {
    format: String,
    crate_version: String,
    config: SolverConfig,
    step: f64,
    times: Vec<f64>,
    frames: Vec<String>,
    initial: String,
    stability: StabilityReport,
    #[serde(default)]
    generation: serde_json::Value,
}

/// Writes `manifest.json`, `initial.csv` and one `frame_NNNNN.csv` per saved
/// time into `dir` (created if missing).
pub fn save_trajectory(dir: &Path, traj: &Trajectory, generation: Option<&serde_json::Value>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let frames: Vec<String> = (0..traj.states.len()).map(|i| format!("frame_{i:05}.csv")).collect();
    for (name, state) in frames.iter().zip(&traj.states) {
        io::save_field(&dir.join(name), state, generation)?;
    }
    io::save_field(&dir.join("initial.csv"), &traj.initial, generation)?;
    let manifest = TrajectoryManifest {
        format: "kdv-trajectory 1".into(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        config: traj.config.clone(),
        step: traj.config.step(),
        times: traj.times.clone(),
        frames,
        initial: "initial.csv".into(),
        stability: traj.stability,
        generation: generation.cloned().unwrap_or(serde_json::Value::Null),
    };
    let file = std::io::BufWriter::new(std::fs::File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(file, &manifest)?;
    Ok(())
}

/// Reads a directory written by [`save_trajectory`].
pub fn load_trajectory(dir: &Path) -> Result<(Trajectory, serde_json::Value)> {
    let manifest: TrajectoryManifest =
        serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(dir.join("manifest.json"))?))?;
    if manifest.times.len() != manifest.frames.len() {
        return Err(Error::Format("manifest times and frames differ in length".into()));
    }
    let states = manifest
        .frames
        .iter()
        .map(|name| io::load_field(&dir.join(name)).map(|f| f.field))
        .collect::<Result<Vec<_>>>()?;
    let initial = io::load_field(&dir.join(&manifest.initial))?.field;
    Ok((
        Trajectory {
            config: manifest.config,
            times: manifest.times,
            states,
            initial,
            stability: manifest.stability,
        },
        manifest.generation,
    ))
}
