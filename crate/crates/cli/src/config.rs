//! Declarative experiment configuration. Every field has a default, so an
//! empty JSON object is a valid config; command-line flags override the file.

use std::path::Path;

use anyhow::{bail, Context};
use kdv_normal_form::operators::NormalFormConstants;
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seeds of the rough initial data for `evolve` and `decompose`.
    pub seeds: Vec<u64>,
    /// Use the unnormalized constants `c_T = 1`, `c_R = 2`.
    pub paper_mode: bool,
    pub verify: VerifyParams,
    pub evolve: EvolveParams,
    pub decompose: DecomposeParams,
    pub scan: ScanParams,
    pub lipschitz: LipschitzParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: (1..=8).collect(),
            paper_mode: false,
            verify: VerifyParams::default(),
            evolve: EvolveParams::default(),
            decompose: DecomposeParams::default(),
            scan: ScanParams::default(),
            lipschitz: LipschitzParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub airy_cutoff: i64,
    pub airy_tolerance: f64,
    pub split_fields: usize,
    pub split_max_mode: usize,
    pub split_tolerance: f64,
    pub b_form_triples: usize,
    pub b_form_tolerance: f64,
    pub resonant_times: Vec<f64>,
    pub resonant_tolerance: f64,
    pub conservation_max_mode: usize,
    pub conservation_dt: f64,
    pub conservation_horizon: f64,
    pub l2_drift_tolerance: f64,
    pub order_tolerance: f64,
    pub w_residual_tolerance: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            airy_cutoff: 128,
            airy_tolerance: 1e-12,
            split_fields: 100,
            split_max_mode: 64,
            split_tolerance: 1e-10,
            b_form_triples: 10_000,
            b_form_tolerance: 1e-14,
            resonant_times: vec![0.0, 0.3, 1.7],
            resonant_tolerance: 1e-12,
            conservation_max_mode: 256,
            conservation_dt: 2e-4,
            conservation_horizon: 1.0,
            l2_drift_tolerance: 1e-8,
            order_tolerance: 0.2,
            w_residual_tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// Borderline rough random data, one run per seed.
    Rough,
    /// Analytic data `amplitude * e^{-|xi|/2}`; seeds are ignored.
    Smooth,
    /// A single cosine at mode 1; seeds are ignored.
    Cosine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveParams {
    pub data: DataKind,
    pub s: f64,
    pub epsilon: f64,
    pub amplitude: f64,
    pub max_mode: usize,
    /// Defaults to the smoothing-experiment step for `max_mode`.
    pub dt: Option<f64>,
    /// Defaults to `min(0.1, ||f||_{L^2}^{-3})`.
    pub horizon: Option<f64>,
    /// Number of save intervals.
    pub frames: usize,
    pub linear_only: bool,
}

impl Default for EvolveParams {
    fn default() -> Self {
        EvolveParams {
            data: DataKind::Rough,
            s: 0.4,
            epsilon: 0.01,
            amplitude: 0.1,
            max_mode: 256,
            dt: None,
            horizon: None,
            frames: 10,
            linear_only: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeParams {
    pub s: f64,
    pub epsilon: f64,
    pub amplitude: f64,
    pub max_mode: usize,
    pub dt: Option<f64>,
    pub horizon: f64,
    pub frames: usize,
    pub refine: bool,
    pub min_gap_v_w: f64,
    pub min_gap_v_h: f64,
    pub refine_tolerance: f64,
}

impl Default for DecomposeParams {
    fn default() -> Self {
        DecomposeParams {
            s: 0.4,
            epsilon: 0.01,
            amplitude: kdv_normal_form::decompose::DEFAULT_SMOOTHING_AMPLITUDE,
            max_mode: 1024,
            dt: None,
            horizon: 0.1,
            frames: 10,
            refine: true,
            min_gap_v_w: 0.35,
            min_gap_v_h: 0.8,
            refine_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanParams {
    /// Any of `M`, `Mprime`, `Mstar`.
    pub kinds: Vec<String>,
    pub s: Vec<f64>,
    pub delta: f64,
    pub epsilon: f64,
    pub cutoffs: Vec<i64>,
    /// Cutoffs for the three-frequency multipliers, whose enumeration is cubic.
    pub triple_cutoffs: Vec<i64>,
    /// A scan counts as stable when the last two cutoffs differ by less.
    pub stability_tolerance: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            kinds: vec!["M".into()],
            s: vec![0.0, 0.25, 0.45, 0.6],
            delta: 0.01,
            epsilon: 0.1,
            cutoffs: vec![256, 1024, 2048, 4096],
            triple_cutoffs: vec![32, 64, 128, 256, 512],
            stability_tolerance: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LipschitzParams {
    pub s: f64,
    pub gamma: f64,
    pub horizon: f64,
    /// Defaults to 64 samples per unit time.
    pub n_times: Option<usize>,
    pub max_mode: usize,
    /// `L^2` norm of each `f`; `g` stays below `norm_bound`.
    pub initial_norm: f64,
    pub norm_bound: f64,
    pub separations: Vec<f64>,
    pub pairs: u64,
    /// Tolerated relative spread of the maximal ratio across separations.
    pub spread_tolerance: f64,
    pub solution_map: SolutionMapParams,
}

impl Default for LipschitzParams {
    fn default() -> Self {
        LipschitzParams {
            s: 0.4,
            gamma: 0.5,
            horizon: 1.0,
            n_times: None,
            max_mode: 256,
            initial_norm: 1.9,
            norm_bound: 2.0,
            separations: vec![1e-2, 1e-3, 1e-4],
            pairs: 20,
            spread_tolerance: 0.1,
            solution_map: SolutionMapParams::default(),
        }
    }
}

/// Pairs of full trajectories from nearby data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolutionMapParams {
    pub enabled: bool,
    pub max_mode: usize,
    pub dt: f64,
    pub horizon: f64,
    pub initial_norm: f64,
    pub sizes: Vec<f64>,
    pub pairs: u64,
    pub spread_tolerance: f64,
}

impl Default for SolutionMapParams {
    fn default() -> Self {
        SolutionMapParams {
            enabled: true,
            max_mode: 64,
            dt: 2.5e-6,
            horizon: 0.1,
            initial_norm: 1.0,
            sizes: vec![1e-3, 1e-4, 1e-5],
            pairs: 4,
            spread_tolerance: 0.2,
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file, or the `config` member of a run manifest so that
    /// a finished run can be replayed.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        let value = match value.get("config") {
            Some(inner) if value.get("command").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
    }

    pub fn consts(&self) -> NormalFormConstants {
        if self.paper_mode {
            NormalFormConstants::paper_mode()
        } else {
            NormalFormConstants::default()
        }
    }

    /// Shrinks every experiment so the whole set finishes in seconds.
    pub fn make_quick(&mut self) {
        let v = &mut self.verify;
        v.split_fields = 10;
        v.b_form_triples = 1000;
        v.conservation_max_mode = 64;
        v.conservation_dt = 2.5e-4;
        v.conservation_horizon = 0.1;
        self.seeds.truncate(2);
        self.evolve.max_mode = self.evolve.max_mode.min(64);
        let d = &mut self.decompose;
        d.max_mode = 128;
        d.horizon = 0.01;
        d.refine = false;
        self.scan.cutoffs = vec![64, 256, 512];
        self.scan.triple_cutoffs = vec![16, 32, 64];
        let l = &mut self.lipschitz;
        l.pairs = 4;
        l.max_mode = 64;
        l.solution_map.pairs = 1;
        l.solution_map.max_mode = 32;
        l.solution_map.dt = 1e-5;
        l.solution_map.horizon = 0.02;
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.seeds.is_empty() {
            bail!(UsageError("at least one seed is required".into()));
        }
        if self.evolve.frames == 0 || self.decompose.frames == 0 {
            bail!(UsageError("frames must be positive".into()));
        }
        if self.lipschitz.separations.is_empty() || self.lipschitz.solution_map.sizes.is_empty() {
            bail!(UsageError("separation lists must not be empty".into()));
        }
        Ok(())
    }
}
