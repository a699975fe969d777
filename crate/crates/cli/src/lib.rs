//! Scenario-driven front end for `wavelab-core`: loads a scenario, runs one
//! command and writes its CSV, JSON, SVG and Markdown outputs.
//!
//! Exit codes: `0` success, `2` success with measured values that disagree
//! with reference values, `1` error (reported as a JSON object).

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use serde::Serialize;

pub use config::{Command, Scenario};
pub use error::{CliError, Result};
pub use output::{Discrepancy, Format};

/// Where the scenario comes from.
#[derive(Clone, Debug)]
pub enum Source {
    Config(PathBuf),
    Preset(String),
}

/// A resolved command line.
#[derive(Clone, Debug)]
pub struct Invocation {
    /// Command requested on the command line; `None` runs whatever the
    /// scenario names.
    pub command: Option<Command>,
    pub source: Source,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Formats to write; empty means all the command produces.
    pub formats: Vec<Format>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub status: &'static str,
    pub exit_code: i32,
    pub command: Command,
    pub scenario: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub discrepancies: Vec<Discrepancy>,
}

pub fn load(inv: &Invocation) -> Result<Scenario> {
    let mut s = match &inv.source {
        Source::Config(p) => Scenario::load(p)?,
        Source::Preset(n) => config::preset(n)?,
    };
    if let Some(c) = inv.command {
        if c != s.command {
            return Err(CliError::Usage(format!("scenario `{}` is a `{}` scenario, not `{}`", s.name, s.command.name(), c.name())));
        }
    }
    if let Some(seed) = inv.seed {
        s.seed = seed;
    }
    if let Some(out) = &inv.out {
        s.output_dir = out.clone();
    }
    Ok(s)
}

pub fn execute(inv: &Invocation) -> Result<RunSummary> {
    let scenario = load(inv)?;
    let outcome = commands::run(&scenario)?;
    let artifacts: Vec<_> = outcome.artifacts.into_iter().filter(|a| inv.formats.is_empty() || inv.formats.contains(&a.format)).collect();
    if artifacts.is_empty() {
        return Err(CliError::Usage(format!("`{}` produces none of the requested formats", scenario.command.name())));
    }
    let files = output::write_artifacts(&scenario.output_dir, &artifacts)?;
    let exit_code = if outcome.discrepancies.is_empty() { 0 } else { 2 };
    Ok(RunSummary {
        status: if exit_code == 0 { "ok" } else { "discrepancy" },
        exit_code,
        command: scenario.command,
        scenario: scenario.name,
        seed: scenario.seed,
        output_dir: scenario.output_dir,
        files,
        discrepancies: outcome.discrepancies,
    })
}
