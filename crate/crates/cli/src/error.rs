use std::path::Path;
use thiserror::Error;

/// Failure of a command, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing configuration or input data.
    #[error("{0}")]
    Config(String),
    /// Exports could not be written.
    #[error("{0}")]
    Output(String),
    /// The optimizer rejected the swarm parameters.
    #[error("{0}")]
    Optimizer(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Output(_) => 3,
            CliError::Optimizer(_) => 4,
        }
    }

    pub(crate) fn config(path: &Path, message: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{}: {message}", path.display()))
    }

    pub(crate) fn output(path: &Path, message: impl std::fmt::Display) -> Self {
        CliError::Output(format!("{}: {message}", path.display()))
    }
}
