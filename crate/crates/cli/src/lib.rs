//! Experiment runner behind the `hypowave` binary.
//!
//! Each experiment reads an [`ExperimentConfig`], writes fixed-column CSV files and a
//! `summary.txt` into the output directory, and reports named pass/fail checks.

pub mod config;
mod report;
mod run;

pub use config::{format_region, parse_region, ConfigError, ExperimentConfig, ExperimentKind};
pub use report::{fmt_f64, Check, Csv, Report};
pub use run::run_experiment;

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(ConfigError),
    #[error("cannot read config {path}: {cause}")]
    ConfigIo { path: PathBuf, cause: std::io::Error },
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },
    #[error(transparent)]
    Core(#[from] hypowave_core::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl CliError {
    /// Errors that map to exit code 2.
    pub fn is_config(&self) -> bool {
        matches!(self, CliError::Config(_) | CliError::ConfigIo { .. })
    }
}

/// Reads `path` (if any) on top of the defaults of `kind`.
pub fn load_config(kind: ExperimentKind, path: Option<&std::path::Path>) -> Result<ExperimentConfig, CliError> {
    match path {
        None => Ok(ExperimentConfig::defaults(kind)),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|cause| CliError::ConfigIo { path: p.to_path_buf(), cause })?;
            Ok(ExperimentConfig::parse(&text, kind)?)
        }
    }
}
