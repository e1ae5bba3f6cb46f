//! Command-line front end: configuration, sweeps, CSV output and the
//! verification runner.

pub mod commands;
pub mod config;
pub mod table;
pub mod verify;

use std::path::PathBuf;

pub use config::{parse_config, ConfigError, RunConfig};
pub use table::{emit_csv, SweepTable};

use crate::error::Error;

/// Every failure the binary can report.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    VerifyFailed(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// Short tag printed as `error[kind]: ...`.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Compute(e) => e.kind(),
            CliError::Degenerate(_) => "degenerate",
            CliError::VerifyFailed(_) => "verify-failed",
            CliError::Internal(_) => "internal",
        }
    }

    /// The single-line diagnostic written to stderr.
    pub fn diagnostic(&self) -> String {
        format!("error[{}]: {}", self.kind(), self.to_string().replace('\n', " "))
    }
}
