//! Lipschitz ratios of the resonant flow over an ensemble of pairs, and of
//! the full solution map over pairs of trajectories.

use std::path::Path;

use kdv_normal_form::resonant::{
    default_time_samples, lipschitz_ratio, perturbed_pair, write_lipschitz_csv, LipschitzRecord, ResonantFlow,
};
use kdv_normal_form::solver::{solution_map_ratio, SolverConfig};
use kdv_normal_form::spectrum::{hs_norm, sample_rough, RoughDataSpec, SobolevIndex, SpectralField};
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{pass_fail, Run, Status};

/// Offset between the seed of `f` and the seed of the perturbation direction.
const DIRECTION_SEED_OFFSET: u64 = 1000;

const COLUMNS: [(&str, &str); 8] = [
    ("seed_f", "seed of the rough datum f"),
    ("seed_g", "seed of the perturbation direction d, with g = f + separation d / ||d||_{H^gamma}"),
    ("gamma", "Sobolev index of the distance"),
    ("s", "Sobolev index of the gauge"),
    ("horizon", "end of the time window"),
    ("ratio", "max over the time grid of ||X_f(t) - X_g(t)||_{H^gamma} / ||f - g||_{H^gamma}"),
    ("argmax_t", "time of the maximum"),
    ("separation", "||f - g||_{H^gamma}"),
];

fn datum(seed: u64, k: usize, l2: f64) -> kdv_normal_form::Result<SpectralField> {
    let f = sample_rough(&RoughDataSpec {
        s: SobolevIndex::new(0.4),
        epsilon: 0.01,
        amplitude: 1.0,
        seed,
        max_mode: k,
    })?;
    let n = hs_norm(&f, SobolevIndex::ZERO);
    Ok(f.scaled(l2 / n))
}

/// Largest relative deviation of `values` from the last one.
fn spread(values: &[f64]) -> f64 {
    let last = *values.last().unwrap();
    values.iter().map(|v| (v / last - 1.0).abs()).fold(0.0, f64::max)
}

pub fn run(config: &ExperimentConfig, out: &Path) -> anyhow::Result<Status> {
    let p = &config.lipschitz;
    let consts = config.consts();
    let s = SobolevIndex::new(p.s);
    let n_times = p.n_times.unwrap_or_else(|| default_time_samples(p.horizon));
    let mut run = Run::start("lipschitz", out)?;

    let per_pair: Vec<(Vec<LipschitzRecord>, f64, f64)> = (0..p.pairs)
        .into_par_iter()
        .map(|pair| -> anyhow::Result<_> {
            let f = datum(pair, p.max_mode, p.initial_norm)?;
            let d = datum(pair + DIRECTION_SEED_OFFSET, p.max_mode, 1.0)?;
            let mut records = Vec::new();
            let mut dense_change = 0.0f64;
            for &sep in &p.separations {
                let g = perturbed_pair(&f, &d, sep, p.gamma)?;
                if hs_norm(&g, SobolevIndex::ZERO) > p.norm_bound {
                    return Err(crate::UsageError(format!("pair {pair}: ||g|| exceeds norm_bound")).into());
                }
                let r = lipschitz_ratio(&f, &g, p.gamma, s, consts, p.horizon, n_times)?;
                let dense = lipschitz_ratio(&f, &g, p.gamma, s, consts, p.horizon, 2 * n_times - 1)?;
                dense_change = dense_change.max((dense.ratio / r.ratio - 1.0).abs());
                records.push(LipschitzRecord {
                    seed_f: pair,
                    seed_g: pair + DIRECTION_SEED_OFFSET,
                    gamma: p.gamma,
                    s: p.s,
                    horizon: p.horizon,
                    ratio: r.ratio,
                    argmax_t: r.argmax_t,
                    separation: sep,
                });
            }
            let phase_speed = ResonantFlow::new(f, s, consts)?.phase_speed_report().max_total;
            Ok((records, dense_change, phase_speed))
        })
        .collect::<anyhow::Result<_>>()?;

    let records: Vec<LipschitzRecord> = per_pair.iter().flat_map(|(r, _, _)| r.clone()).collect();
    write_lipschitz_csv(run.file("lipschitz.csv")?, &records)?;
    run.describe("lipschitz.csv", &COLUMNS);

    let max_by_sep: Vec<f64> = p
        .separations
        .iter()
        .map(|&sep| {
            records
                .iter()
                .filter(|r| r.separation == sep)
                .map(|r| r.ratio)
                .fold(0.0, f64::max)
        })
        .collect();
    let grid_change = per_pair.iter().map(|x| x.1).fold(0.0, f64::max);
    let phase_speed = per_pair.iter().map(|x| x.2).fold(0.0, f64::max);
    let resonant_spread = spread(&max_by_sep);
    let resonant_ok = max_by_sep.iter().all(|r| r.is_finite()) && resonant_spread <= p.spread_tolerance;
    run.say(format!(
        "resonant flow, {} pairs: max ratio {:?} at separations {:?}, spread {:.2e} {}",
        p.pairs,
        max_by_sep,
        p.separations,
        resonant_spread,
        pass_fail(resonant_ok)
    ));
    run.say(format!(
        "time grid: {n_times} samples; doubling changes ratios by at most {grid_change:.2e}; max phase speed {phase_speed:.3e}"
    ));

    let mut status = Status::from_pass(resonant_ok);
    let mut details = json!({
        "resonant": {"max_ratio": max_by_sep, "spread": resonant_spread, "grid_change": grid_change, "max_phase_speed": phase_speed},
    });
    let q = &p.solution_map;
    if q.enabled {
        let mut c = SolverConfig::new(s, q.max_mode, q.dt, q.horizon);
        c.consts = consts;
        c.save_every = (c.n_steps() / 100).max(1);
        let mut rows = Vec::new();
        let mut worst = 0.0f64;
        let mut resolved = true;
        for pair in 0..q.pairs {
            let seed_g = pair + 2 * DIRECTION_SEED_OFFSET;
            let f = datum(pair, q.max_mode, q.initial_norm)?;
            let d = datum(seed_g, q.max_mode, 1.0)?;
            let mut ratios = Vec::new();
            for &eta in &q.sizes {
                let g = perturbed_pair(&f, &d, eta, p.gamma)?;
                let r = solution_map_ratio(&f, &g, &c, p.gamma)?;
                resolved &= r.stability_f.ok() && r.stability_g.ok();
                ratios.push(r.ratio);
                rows.push(LipschitzRecord {
                    seed_f: pair,
                    seed_g,
                    gamma: p.gamma,
                    s: p.s,
                    horizon: c.final_time(),
                    ratio: r.ratio,
                    argmax_t: r.argmax_t,
                    separation: eta,
                });
            }
            let sp = spread(&ratios);
            worst = worst.max(sp);
            run.say(format!("solution map pair {pair}: ratios {ratios:.5?}, spread {sp:.2e}"));
        }
        write_lipschitz_csv(run.file("solution_map.csv")?, &rows)?;
        run.describe("solution_map.csv", &COLUMNS);
        let ok = worst <= q.spread_tolerance;
        run.say(format!(
            "solution map: max spread {worst:.2e} (tolerance {}) {}",
            q.spread_tolerance,
            pass_fail(ok)
        ));
        status = status.max(Status::from_pass(ok));
        if !resolved {
            run.say("solution map: some trajectories were under-resolved or too stiff".into());
            status = Status::Abort;
        }
        details["solution_map"] = json!({"max_spread": worst, "resolved": resolved});
    }
    run.finish(config, status, details)
}
