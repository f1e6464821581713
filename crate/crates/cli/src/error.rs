use std::path::PathBuf;

use mcv_core::McvError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Input(String),
    #[error("{context}: {source}")]
    Core { context: String, source: McvError },
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// 3 for moment-assumption failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } if source.is_degeneracy() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Context<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for Result<T, McvError> {
    fn context(self, ctx: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core { context: ctx(), source })
    }
}
