//! `kdv-nf`: runs the verification suites and experiments of the
//! `kdv-normal-form` library and persists their outputs.
//!
//! Exit codes: 0 pass, 1 suite failure, 2 usage error, 3 numerical abort
//! (blow-up or under-resolution).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdv_normal_form::Error as CoreError;

use crate::config::ExperimentConfig;
use crate::output::Status;

/// Invalid flags or configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "kdv-nf", version, about = "Normal-form decomposition experiments for periodic KdV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON config file, or a manifest.json of an earlier run to replay it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; each subcommand writes into its own subdirectory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Seed of the rough data; repeat for an ensemble. Replaces the config list.
    #[arg(long = "seed", global = true, value_name = "N")]
    seeds: Vec<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Use the unnormalized constants c_T = 1, c_R = 2.
    #[arg(long, global = true)]
    paper_mode: bool,
    /// Shrink every experiment to a smoke-test size.
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the identity and solver suites.
    Verify,
    /// Evolve initial data and save the trajectories.
    Evolve,
    /// Run the smoothing experiment, or decompose a saved run.
    Decompose {
        /// A run directory written by `evolve` (one `seed_N` subdirectory).
        #[arg(long, value_name = "DIR")]
        run: Option<PathBuf>,
    },
    /// Lattice suprema of the multipliers.
    Scan,
    /// Lipschitz ratios of the resonant flow and of the full solution map.
    Lipschitz,
    /// Summarize the manifests found under the output directory.
    Report,
}

fn load_config(g: &GlobalArgs) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &g.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if !g.seeds.is_empty() {
        config.seeds = g.seeds.clone();
    }
    if g.paper_mode {
        config.paper_mode = true;
    }
    if g.quick {
        config.make_quick();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(UsageError("--jobs must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let out = &cli.global.out;
    if let Command::Report = cli.command {
        return commands::report::run(out);
    }
    let config = load_config(&cli.global)?;
    match cli.command {
        Command::Verify => commands::verify::run(&config, out),
        Command::Evolve => commands::evolve::run(&config, out),
        Command::Decompose { run } => match run {
            Some(dir) => commands::decompose::run_saved(&config, &dir, out),
            None => commands::decompose::run(&config, out),
        },
        Command::Scan => commands::scan::run(&config, out),
        Command::Lipschitz => commands::lipschitz::run(&config, out),
        Command::Report => unreachable!(),
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::BlowUp { .. } | CoreError::TooManyExcluded { .. }) => 3,
        Some(
            CoreError::InvalidParameter(_)
            | CoreError::InvalidBand { .. }
            | CoreError::EmptyAdmissibleSet { .. }
            | CoreError::ModeMismatch { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
