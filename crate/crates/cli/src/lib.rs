//! Command line front end: system files, pipelines and JSON reports.

pub mod corpus;
pub mod model;
pub mod run;
pub mod sysfile;

use dflat::DflatError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("missing {0}")]
    Missing(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] DflatError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn is_inconclusive(&self) -> bool {
        matches!(self, CliError::Core(e) if e.is_inconclusive())
    }

    /// Process exit status: 2 for inconclusive computations, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_inconclusive() {
            2
        } else {
            1
        }
    }
}

pub fn read_file(path: &str) -> Result<sysfile::SystemFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    text.parse()
}
