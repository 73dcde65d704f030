//! Experiment drivers behind the `freqlab` binary.
//!
//! Every command takes an [`ExperimentConfig`], writes its outputs into one
//! directory and returns an [`Outcome`] listing the files and any failed
//! assertions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use output::Meta;

/// Files written by a command and the assertions that failed.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
    pub summary: serde_json::Value,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Turns failed assertions into [`CliError::Assertion`].
    pub fn into_result(self) -> Result<Self> {
        if self.failures.is_empty() {
            Ok(self)
        } else {
            Err(CliError::Assertion(self.failures))
        }
    }
}

/// Subcommands, in the order the binary lists them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    FrequencyProfile,
    Cover,
    BoundaryNodal,
    YauScan,
    HopfDensity,
    DimBound,
    Simulate,
    Cantor,
}

/// Runs one command and writes its outputs under `out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let meta = Meta::new(cfg)?;
    match cmd {
        Command::FrequencyProfile => commands::frequency::run(cfg, &meta, out),
        Command::Cover => commands::cover::run(cfg, &meta, out),
        Command::BoundaryNodal => commands::boundary_nodal::run(cfg, &meta, out),
        Command::YauScan => commands::yau::run(cfg, &meta, out),
        Command::HopfDensity => commands::hopf::run(cfg, &meta, out),
        Command::DimBound => commands::combinatorics::dim_bound(cfg, &meta, out),
        Command::Simulate => commands::combinatorics::simulate(cfg, &meta, out),
        Command::Cantor => commands::cantor::run(cfg, &meta, out),
    }
}
