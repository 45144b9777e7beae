//! Evolves the configured initial data and saves each trajectory.

use std::path::Path;

use kdv_normal_form::decompose::default_smoothing_dt;
use kdv_normal_form::solver::{conserved_diagnostics, default_horizon, evolve, save_trajectory, SolverConfig};
use kdv_normal_form::spectrum::{sample_rough, single_cosine, smooth_data, RoughDataSpec, SobolevIndex, SpectralField};
use serde_json::json;

use crate::config::{DataKind, EvolveParams, ExperimentConfig};
use crate::output::{Run, Status};

fn initial_data(p: &EvolveParams, seed: u64) -> kdv_normal_form::Result<(SpectralField, serde_json::Value)> {
    Ok(match p.data {
        DataKind::Rough => {
            let spec = RoughDataSpec {
                s: SobolevIndex::new(p.s),
                epsilon: p.epsilon,
                amplitude: p.amplitude,
                seed,
                max_mode: p.max_mode,
            };
            (sample_rough(&spec)?, json!({ "kind": "rough", "spec": spec }))
        }
        DataKind::Smooth => (
            smooth_data(p.max_mode, p.amplitude),
            json!({ "kind": "smooth", "amplitude": p.amplitude }),
        ),
        DataKind::Cosine => (
            single_cosine(p.max_mode, 1, p.amplitude),
            json!({ "kind": "cosine", "mode": 1, "amplitude": p.amplitude }),
        ),
    })
}

pub fn run(config: &ExperimentConfig, out: &Path) -> anyhow::Result<Status> {
    let p = &config.evolve;
    let mut run = Run::start("evolve", out)?;
    let seeds: Vec<u64> = match p.data {
        DataKind::Rough => config.seeds.clone(),
        _ => vec![0],
    };
    let mut details = Vec::new();
    let mut status = Status::Pass;
    for seed in seeds {
        let (f, generation) = initial_data(p, seed)?;
        let horizon = p.horizon.unwrap_or_else(|| default_horizon(&f));
        let mut c = SolverConfig::new(
            SobolevIndex::new(p.s),
            p.max_mode,
            p.dt.unwrap_or_else(|| default_smoothing_dt(p.max_mode)),
            horizon,
        );
        c.consts = config.consts();
        c.linear_only = p.linear_only;
        c.save_every = (c.n_steps() / p.frames).max(1);
        let traj = evolve(&f, &c)?;
        let name = format!("seed_{seed}");
        save_trajectory(&run.path(&name), &traj, Some(&generation))?;
        let d = conserved_diagnostics(&traj);
        let ok = traj.stability.ok();
        if !ok {
            status = Status::Abort;
        }
        run.say(format!(
            "{name}: T = {}, {} frames, L2 drift {:e}, stiffness {:.3}, tail {:e} -> {:e}{}",
            traj.final_time(),
            traj.times.len(),
            d.l2_drift,
            traj.stability.max_stiffness,
            traj.stability.tail_initial,
            traj.stability.tail_max,
            if ok { "" } else { " (under-resolved or too stiff)" }
        ));
        details.push(json!({
            "run": name,
            "seed": seed,
            "final_time": traj.final_time(),
            "stability": traj.stability,
            "conserved": d,
        }));
    }
    run.describe(
        "seed_N/frame_NNNNN.csv",
        &[
            ("xi", "frequency"),
            ("re", "real part of the Fourier coefficient of the gauged variable v"),
            ("im", "imaginary part of the same coefficient"),
        ],
    );
    run.finish(config, status, json!(details))
}
