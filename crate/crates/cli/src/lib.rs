//! Batch experiment runner on top of the `twosdr` library: declarative
//! experiment specs, canned benchmark reproduction bundles, synthetic
//! sweeps, and dataset fetch instructions.

pub mod instructions;
pub mod reproduce;
pub mod runner;
pub mod spec;

use std::fmt;
use std::path::PathBuf;

/// Stage-tagged error: every failure names the pipeline stage it came from.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn new(stage: &'static str, message: impl fmt::Display) -> Self {
        CliError {
            stage,
            message: message.to_string(),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T, E: fmt::Display> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::new(stage, e))
    }
}

/// Repository root holding `schemas/`, `specs/` and `data/`. Overridable
/// with `TWOSDR_ROOT`; defaults to the source tree this binary was built
/// from, which is the right thing for a research checkout.
pub fn repo_root() -> PathBuf {
    if let Ok(root) = std::env::var("TWOSDR_ROOT") {
        return PathBuf::from(root);
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
}

/// Resolve a spec-file path against the repository root; absolute paths pass
/// through, and `data/...` paths honor `TWOSDR_DATA_DIR`.
pub fn resolve_path(root: &std::path::Path, path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    if p.is_absolute() {
        return p;
    }
    if let Some(rest) = path.strip_prefix("data/") {
        if let Ok(data_dir) = std::env::var("TWOSDR_DATA_DIR") {
            return PathBuf::from(data_dir).join(rest);
        }
    }
    root.join(path)
}
