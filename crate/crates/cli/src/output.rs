//! Run manifests and output files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Outcome of a subcommand; later variants dominate when combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Abort,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Abort => 3,
        }
    }

    pub fn from_pass(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Column name to meaning, per output file.
pub type Columns = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub status: Status,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub columns: Columns,
    pub summary: Vec<String>,
    pub details: serde_json::Value,
}

/// Collects the files and metadata of one subcommand run.
pub struct Run {
    command: String,
    dir: PathBuf,
    started: Instant,
    outputs: Vec<String>,
    columns: Columns,
    pub summary: Vec<String>,
}

impl Run {
    pub fn start(command: &str, out: &Path) -> anyhow::Result<Run> {
        let dir = out.join(command);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Run {
            command: command.into(),
            dir,
            started: Instant::now(),
            outputs: Vec::new(),
            columns: Columns::new(),
            summary: Vec::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.into());
        self.dir.join(name)
    }

    pub fn file(&mut self, name: &str) -> anyhow::Result<fs::File> {
        let path = self.path(name);
        fs::File::create(&path).with_context(|| format!("creating {}", path.display()))
    }

    pub fn describe(&mut self, file: &str, columns: &[(&str, &str)]) {
        self.columns.insert(
            file.into(),
            columns.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        );
    }

    pub fn say(&mut self, line: String) {
        println!("{line}");
        self.summary.push(line);
    }

    /// Writes `manifest.json` and returns the status.
    pub fn finish(self, config: &ExperimentConfig, status: Status, details: serde_json::Value) -> anyhow::Result<Status> {
        let manifest = Manifest {
            command: self.command,
            crate_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            status,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
            columns: self.columns,
            summary: self.summary,
            details,
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(status)
    }
}

pub fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
