use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("assertion failed: {}", .0.join("; "))]
    Assertion(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(freqlab_core::Error),

    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn missing(key: &str) -> Self {
        Self::Config(format!("missing key `{key}`"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assertion(_) => 2,
            CliError::Config(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<freqlab_core::Error> for CliError {
    fn from(e: freqlab_core::Error) -> Self {
        use freqlab_core::Error as E;
        match e {
            E::NonConvergence { .. } | E::NotPositiveDefinite(_) | E::VanishingHeight { .. } | E::Mesh(_) | E::EmptyInterior => {
                CliError::Numerical(e)
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
