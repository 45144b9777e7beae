//! Plain-text summary of every run found under the output directory.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;

use crate::output::{Manifest, Status};
use crate::UsageError;

const COMMANDS: [&str; 5] = ["verify", "evolve", "decompose", "scan", "lipschitz"];

pub fn run(out: &Path) -> anyhow::Result<Status> {
    let mut text = String::new();
    let mut status = Status::Pass;
    let mut found = 0;
    for command in COMMANDS {
        let path = out.join(command).join("manifest.json");
        if !path.exists() {
            continue;
        }
        let raw = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
        found += 1;
        status = status.max(m.status);
        writeln!(
            text,
            "== {} ({:?}, {:.1}s, version {})",
            m.command, m.status, m.wall_time_seconds, m.crate_version
        )?;
        for line in &m.summary {
            writeln!(text, "  {line}")?;
        }
        writeln!(text, "  outputs: {}", m.outputs.join(", "))?;
    }
    if found == 0 {
        return Err(UsageError(format!("no run manifests under {}", out.display())).into());
    }
    print!("{text}");
    std::fs::write(out.join("summary.txt"), &text)?;
    Ok(status)
}
