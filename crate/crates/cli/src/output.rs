use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Provenance stamped into every output: code version, config hash and the config itself.
#[derive(Clone, Debug)]
pub struct Meta {
    pub version: &'static str,
    pub config_json: String,
    pub config_sha256: String,
}

impl Meta {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let config_json = serde_json::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))?;
        let digest = Sha256::digest(config_json.as_bytes());
        let config_sha256 = digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Ok(Self { version: freqlab_core::VERSION, config_json, config_sha256 })
    }

    /// `#`-prefixed header lines for CSV files.
    pub fn csv_header(&self) -> String {
        format!("# {}\n# config_sha256 {}\n# config {}\n", self.version, self.config_sha256, self.config_json)
    }
}

/// Writes via a temporary sibling and a rename, so readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// CSV body (header row first) prefixed with the metadata lines.
pub fn write_csv(dir: &Path, name: &str, meta: &Meta, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = meta.csv_header();
    text.push_str(body);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'a str,
    config_sha256: &'a str,
    config: serde_json::Value,
    result: &'a T,
}

/// JSON document `{version, config_sha256, config, result}`.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, meta: &Meta, result: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let config = serde_json::from_str(&meta.config_json).map_err(|e| CliError::Config(e.to_string()))?;
    let env = Envelope { version: meta.version, config_sha256: &meta.config_sha256, config, result };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Formats a float for CSV cells with full round-trip precision.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}
