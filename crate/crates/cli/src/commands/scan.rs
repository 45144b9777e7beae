//! Lattice suprema of the multipliers `M`, `Mprime`, `Mstar`.

use std::path::Path;

use kdv_normal_form::operators::{multiplier_sup, write_scan_csv, MultiplierKind, MultiplierScan};
use kdv_normal_form::spectrum::SobolevIndex;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{Run, Status};
use crate::UsageError;

/// Growth verdict of one scan: stable when the last two cutoffs agree to
/// `tolerance`, growing when the suprema strictly increase throughout.
pub fn verdict(scan: &MultiplierScan, tolerance: f64) -> &'static str {
    let n = scan.sups.len();
    if n >= 2 && scan.relative_change(n - 2, n - 1).abs() < tolerance {
        "stable"
    } else if scan.sups.windows(2).all(|w| w[1] > w[0]) {
        "growing"
    } else {
        "undecided"
    }
}

pub fn run(config: &ExperimentConfig, out: &Path) -> anyhow::Result<Status> {
    let p = &config.scan;
    let mut run = Run::start("scan", out)?;
    let mut scans = Vec::new();
    for name in &p.kinds {
        let kind = MultiplierKind::parse(name)
            .ok_or_else(|| UsageError(format!("unknown multiplier {name:?}; expected M, Mprime or Mstar")))?;
        let cutoffs = match kind {
            MultiplierKind::M => &p.cutoffs,
            _ => &p.triple_cutoffs,
        };
        for &s in &p.s {
            let scan = multiplier_sup(kind, SobolevIndex::new(s), p.delta, p.epsilon, cutoffs)?;
            run.say(format!(
                "{} s={s}: {} ({})",
                kind.name(),
                scan.sups.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", "),
                verdict(&scan, p.stability_tolerance)
            ));
            scans.push(scan);
        }
    }
    write_scan_csv(run.file("scan.csv")?, &scans)?;
    run.describe(
        "scan.csv",
        &[
            ("name", "M: bilinear bound of the normal form; Mprime, Mstar: trilinear bounds of the non-resonant term"),
            ("s", "Sobolev index"),
            ("delta", "margin in the trilinear multipliers"),
            ("epsilon", "Sobolev-embedding margin in M"),
            ("cutoff", "all input frequencies satisfy |xi_j| <= cutoff"),
            ("sup", "supremum of the multiplier over the admissible lattice within the cutoff"),
            ("argmax_xi1", "maximizing xi1"),
            ("argmax_xi2", "maximizing xi2"),
            ("argmax_xi3", "maximizing xi3 (empty for M)"),
        ],
    );
    let verdicts: Vec<_> = scans
        .iter()
        .map(|sc| json!({"name": sc.kind.name(), "s": sc.s.value(), "verdict": verdict(sc, p.stability_tolerance)}))
        .collect();
    run.finish(config, Status::Pass, json!(verdicts))
}
