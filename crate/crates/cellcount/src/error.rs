use std::path::Path;

/// Failures surfaced by the command-line tool.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or parameter values; nothing was written.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn at(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }
}

impl From<cellcount_core::Error> for CliError {
    fn from(e: cellcount_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
