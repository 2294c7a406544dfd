use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or parameters; exit code 2.
    #[error("{0}")]
    Validation(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] wickfock::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use wickfock::Error as E;
        match self {
            CliError::Validation(_) | CliError::Read { .. } => 2,
            CliError::Write { .. } => 1,
            CliError::Core(e) if e.is_size_guard() => 3,
            // a numerical self-check failed, the input itself was fine
            CliError::Core(E::Verification(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
