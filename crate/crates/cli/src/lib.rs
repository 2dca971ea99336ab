//! Scenario runner for the `calspec` command.
//!
//! A scenario is a JSON file naming calibrations, operators and tasks. `run`
//! writes one JSON report per task, CSV traces and spectral sets, and a
//! `summary.json`. Exit codes: 0 when every check passes, 1 when any check
//! fails or an analysis errors, 2 for malformed input.

use std::path::{Path, PathBuf};

pub mod generate;
pub mod run;
pub mod scenario;

pub use generate::{generate, to_json};
pub use run::{run, RunOptions, RunSummary};
pub use scenario::{parse, validate, Resolved, Scenario, ValidationError};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "CALSPEC_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(#[from] ValidationError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] calspec::Error),
}

impl CliError {
    /// Everything here is a problem with the input rather than a failed
    /// property.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub fn load(path: &Path) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(validate(parse(&text)?)?)
}

/// Loads, validates and runs a scenario file; returns the exit code.
pub fn run_file(path: &Path, out: &Path, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let resolved = load(path)?;
    run(&resolved, out, opts)
}
