//! Identity and solver suites with pass/fail against the configured tolerances.

use std::path::Path;

use kdv_normal_form::decompose::w_equation_residual;
use kdv_normal_form::operators::{
    airy_identity_residual, b_form, split_trilinear, trilinear_direct, NormalFormConstants,
};
use kdv_normal_form::resonant::ResonantFlow;
use kdv_normal_form::solver::{conserved_diagnostics, evolve, self_convergence_order, SolverConfig};
use kdv_normal_form::spectrum::{sample_rough, single_cosine, smooth_data, RoughDataSpec, SobolevIndex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{pass_fail, Run, Status};

#[derive(Debug, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

fn suite(suite: &str, value: f64, tolerance: f64, pass: bool, note: String) -> SuiteResult {
    SuiteResult {
        suite: suite.into(),
        value,
        tolerance,
        pass,
        note,
    }
}

fn rough_field(seed: u64, k: usize) -> kdv_normal_form::Result<kdv_normal_form::spectrum::SpectralField> {
    sample_rough(&RoughDataSpec {
        s: SobolevIndex::new(0.4),
        epsilon: 0.01,
        amplitude: 1.0,
        seed,
        max_mode: k,
    })
}

pub fn suites(config: &ExperimentConfig) -> anyhow::Result<Vec<SuiteResult>> {
    let p = &config.verify;
    let consts = config.consts();
    let mut out = Vec::new();

    let airy = [0.0, 0.25, 0.45]
        .iter()
        .map(|&s| airy_identity_residual(SobolevIndex::new(s), consts, p.airy_cutoff))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let note = if airy <= p.airy_tolerance {
        format!("s in {{0, 0.25, 0.45}}, cutoff {}", p.airy_cutoff)
    } else {
        format!(
            "identity fails with c_T = {}; the normalization that makes it exact is c_T = -1/3",
            consts.c_t
        )
    };
    out.push(suite("airy_identity", airy, p.airy_tolerance, airy <= p.airy_tolerance, note));

    let mut split_err = 0.0f64;
    for i in 0..p.split_fields {
        let v = rough_field(i as u64, p.split_max_mode)?;
        let s = SobolevIndex::new(0.45 * i as f64 / p.split_fields.max(1) as f64);
        let split = split_trilinear(&v, s, consts)?;
        let direct = trilinear_direct(&v, s, consts)?;
        split_err = split_err.max((&split.nonres + &split.res).max_abs_diff(&direct));
    }
    out.push(suite(
        "split_additivity",
        split_err,
        p.split_tolerance,
        split_err <= p.split_tolerance,
        format!("{} fields, K = {}, against direct triple sums", p.split_fields, p.split_max_mode),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut b_err = 0.0f64;
    for _ in 0..p.b_form_triples {
        let (x, y, z) = (c(), c(), c());
        let sum = x + y + z;
        b_err = b_err.max((b_form(x, y, z) - (sum.norm_sqr() * sum - x.norm_sqr() * x)).norm());
    }
    out.push(suite(
        "b_form",
        b_err,
        p.b_form_tolerance,
        b_err <= p.b_form_tolerance,
        format!("{} random triples", p.b_form_triples),
    ));

    let mut res = 0.0f64;
    for seed in 0..5 {
        let flow = ResonantFlow::new(rough_field(100 + seed, 64)?, SobolevIndex::new(0.4), consts)?;
        for &t in &p.resonant_times {
            res = res.max(flow.residual(t));
        }
    }
    out.push(suite(
        "resonant_flow",
        res,
        p.resonant_tolerance,
        res <= p.resonant_tolerance,
        format!("c_R = {}, times {:?}", consts.c_r, p.resonant_times),
    ));

    let k = p.conservation_max_mode;
    let mut sc = SolverConfig::new(SobolevIndex::new(0.4), k, p.conservation_dt, p.conservation_horizon);
    sc.consts = consts;
    sc.save_every = (sc.n_steps() / 10).max(1);
    let traj = evolve(&smooth_data(k, 0.5), &sc)?;
    let d = conserved_diagnostics(&traj);
    out.push(suite(
        "mean_conservation",
        d.mean_drift,
        0.0,
        d.mean_drift == 0.0,
        "max |v(t, 0)|".into(),
    ));
    out.push(suite(
        "l2_conservation",
        d.l2_drift,
        p.l2_drift_tolerance,
        d.l2_drift <= p.l2_drift_tolerance,
        format!("smooth data, K = {k}, T = {}", traj.final_time()),
    ));

    let mut oc = SolverConfig::new(SobolevIndex::ZERO, 32, 1.0 / 64.0, 1.0);
    oc.consts = consts;
    let order = self_convergence_order(&single_cosine(32, 1, 0.5), &oc)?;
    out.push(suite(
        "time_order",
        order,
        p.order_tolerance,
        (order - 4.0).abs() <= p.order_tolerance,
        "single cosine, dt = 1/64, 1/128, 1/256; expected 4".into(),
    ));

    let mut wc = SolverConfig::new(SobolevIndex::new(0.3), 16, 1e-4, 0.02);
    wc.consts = consts;
    wc.save_every = 1;
    let w = w_equation_residual(&evolve(&smooth_data(16, 0.3), &wc)?, consts)?;
    out.push(suite(
        "w_equation",
        w.relative,
        p.w_residual_tolerance,
        w.relative <= p.w_residual_tolerance,
        format!("{} frames, relative to max |RHS|", w.frames_checked),
    ));
    Ok(out)
}

pub fn run(config: &ExperimentConfig, out: &Path) -> anyhow::Result<Status> {
    let mut run = Run::start("verify", out)?;
    if config.paper_mode {
        let c = NormalFormConstants::paper_mode();
        run.say(format!("paper mode: c_T = {}, c_R = {}", c.c_t, c.c_r));
    }
    let results = suites(config)?;
    let mut csv = csv::Writer::from_writer(run.file("verify.csv")?);
    for r in &results {
        csv.serialize(r)?;
        run.say(format!(
            "{:<18} {}  value {:e}  tolerance {:e}  {}",
            r.suite,
            pass_fail(r.pass),
            r.value,
            r.tolerance,
            r.note
        ));
    }
    csv.flush()?;
    run.describe(
        "verify.csv",
        &[
            ("suite", "name of the identity or solver check"),
            ("value", "measured defect (order estimate for time_order)"),
            ("tolerance", "pass threshold"),
            ("pass", "value within tolerance"),
            ("note", "parameters of the check"),
        ],
    );
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.suite.as_str()).collect();
    if !failed.is_empty() {
        run.say(format!("failing suites: {}", failed.join(", ")));
    }
    let status = Status::from_pass(failed.is_empty());
    run.finish(config, status, serde_json::to_value(&results)?)
}
