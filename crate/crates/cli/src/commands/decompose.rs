//! The smoothing experiment `v = R + h + w` over a seed ensemble, or the
//! decomposition of one saved trajectory.

use std::path::Path;

use anyhow::Context;
use kdv_normal_form::decompose::{
    default_band, default_smoothing_dt, smoothing_report, summarize_trajectory, DecompositionReport, SeedResult,
};
use kdv_normal_form::solver::{load_trajectory, SolverConfig};
use kdv_normal_form::spectrum::{RoughDataSpec, SobolevIndex};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{pass_fail, Run, Status};

const SLOPE_COLUMNS: [(&str, &str); 4] = [
    ("seed", "seed of the rough initial data"),
    ("component", "v (solution), R (resonant flow), h (normal-form correction), w (remainder)"),
    (
        "metric",
        "tail_slope: least-squares log-log slope of the shell spectrum on [K/16, K/2] at the final time; tail_slope_initial: the same for the data; max_t_norm_Hr: max over saved times of the H^r norm in the gauged frame; h_bound_ratio: max_t ||h||_{H^1} / ||v||_{L^2}^2",
    ),
    ("value", "metric value"),
];

const SPECTRA_COLUMNS: [(&str, &str); 5] = [
    ("seed", "seed of the rough initial data"),
    ("component", "v, R, h or w"),
    ("log_center", "natural log of the geometric mean of <xi> in the shell"),
    ("log_rms", "natural log of the root-mean-square coefficient modulus in the shell"),
    ("count", "number of frequencies in the shell"),
];

fn write_tables(run: &mut Run, report: &DecompositionReport) -> anyhow::Result<()> {
    report.write_csv(run.file("slopes.csv")?)?;
    report.write_spectra_csv(run.file("spectra.csv")?)?;
    run.describe("slopes.csv", &SLOPE_COLUMNS);
    run.describe("spectra.csv", &SPECTRA_COLUMNS);
    std::fs::write(run.path("report.json"), report.to_json()? + "\n")?;
    Ok(())
}

pub fn run(config: &ExperimentConfig, out: &Path) -> anyhow::Result<Status> {
    let p = &config.decompose;
    let mut run = Run::start("decompose", out)?;
    let s = SobolevIndex::new(p.s);
    let specs: Vec<RoughDataSpec> = config
        .seeds
        .iter()
        .map(|&seed| RoughDataSpec {
            s,
            epsilon: p.epsilon,
            amplitude: p.amplitude,
            seed,
            max_mode: p.max_mode,
        })
        .collect();
    let mut c = SolverConfig::new(s, p.max_mode, p.dt.unwrap_or_else(|| default_smoothing_dt(p.max_mode)), p.horizon);
    c.consts = config.consts();
    c.save_every = (c.n_steps() / p.frames).max(1);
    let report = smoothing_report(&specs, &c, p.refine)?;
    write_tables(&mut run, &report)?;

    run.say(format!(
        "K = {}, dt = {:e}, T = {}, amplitude {}, {} of {} seeds kept",
        p.max_mode,
        c.step(),
        c.final_time(),
        p.amplitude,
        report.ensemble_size,
        specs.len()
    ));
    for e in &report.excluded {
        run.say(format!("excluded seed {}: {}", e.seed, e.reason));
    }
    for (name, stat) in &report.slopes {
        run.say(format!("slope({name}) = {:.3} +- {:.3}", stat.mean, stat.std));
    }
    let gap_vw = report.gap_v_w.mean >= p.min_gap_v_w;
    let gap_vh = report.gap_v_h.mean >= p.min_gap_v_h;
    run.say(format!(
        "slope(v) - slope(w) = {:.3} +- {:.3} (threshold {}) {}",
        report.gap_v_w.mean,
        report.gap_v_w.std,
        p.min_gap_v_w,
        pass_fail(gap_vw)
    ));
    run.say(format!(
        "slope(v) - slope(h) = {:.3} +- {:.3} (threshold {}) {}",
        report.gap_v_h.mean,
        report.gap_v_h.std,
        p.min_gap_v_h,
        pass_fail(gap_vh)
    ));
    let mut ok = gap_vw && gap_vh;
    if let Some(r) = &report.refine {
        let pass = r.passes(p.refine_tolerance);
        ok &= pass;
        run.say(format!(
            "refine (dt, K) vs (dt/2, 2K) on |xi| <= {}: {:e} (tolerance {:e}) {}",
            r.band,
            r.difference,
            p.refine_tolerance,
            pass_fail(pass)
        ));
    }
    let status = match report.check_exclusions() {
        Err(e) => {
            run.say(format!("numerical abort: {e}"));
            Status::Abort
        }
        Ok(()) => Status::from_pass(ok),
    };
    let details = json!({
        "gap_v_w": report.gap_v_w,
        "gap_v_h": report.gap_v_h,
        "refine": report.refine,
        "excluded": report.excluded.iter().map(|e| json!({"seed": e.seed, "reason": e.reason})).collect::<Vec<_>>(),
    });
    run.finish(config, status, details)
}

/// Decomposes every `seed_N` trajectory saved by `evolve` under `dir` (or
/// `dir` itself when it is a trajectory directory).
pub fn run_saved(config: &ExperimentConfig, dir: &Path, out: &Path) -> anyhow::Result<Status> {
    let mut run = Run::start("decompose", out)?;
    let mut dirs: Vec<_> = if dir.join("manifest.json").exists() && dir.join("initial.csv").exists() {
        vec![dir.to_path_buf()]
    } else {
        std::fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("initial.csv").exists())
            .collect()
    };
    dirs.sort();
    if dirs.is_empty() {
        return Err(crate::UsageError(format!("no saved trajectories under {}", dir.display())).into());
    }
    let mut results: Vec<SeedResult> = Vec::new();
    for d in &dirs {
        let (traj, generation) = load_trajectory(d)?;
        let seed = generation
            .pointer("/spec/seed")
            .and_then(|v| v.as_u64())
            .unwrap_or(0);
        let r = summarize_trajectory(&traj, seed, default_band(traj.config.max_mode))?;
        run.say(format!(
            "{}: slopes v {:.3} R {:.3} h {:.3} w {:.3}",
            d.display(),
            r.slope("v"),
            r.slope("R"),
            r.slope("h"),
            r.slope("w")
        ));
        results.push(r);
    }
    let mut csv = csv::Writer::from_writer(run.file("slopes.csv")?);
    csv.write_record(["seed", "component", "metric", "value"])?;
    for r in &results {
        for c in &r.components {
            csv.write_record([r.seed.to_string(), c.name.clone(), "tail_slope".into(), format!("{:e}", c.slope)])?;
        }
    }
    csv.flush()?;
    run.describe("slopes.csv", &SLOPE_COLUMNS);
    std::fs::write(run.path("results.json"), serde_json::to_string_pretty(&results)? + "\n")?;
    let status = if results.iter().all(|r| r.stability.ok()) {
        Status::Pass
    } else {
        Status::Abort
    };
    run.finish(config, status, json!({ "runs": dirs }))
}
