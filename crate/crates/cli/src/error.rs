use std::path::PathBuf;

use mona_core::MonaError;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{}: {msg}", path.display())]
    Input { path: PathBuf, msg: String },
    #[error("{}: {msg}", path.display())]
    Output { path: PathBuf, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] MonaError),
}

impl CliError {
    pub fn input(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Input {
            path: path.into(),
            msg: err.to_string(),
        }
    }

    pub fn output(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Output {
            path: path.into(),
            msg: err.to_string(),
        }
    }

    /// 1 for parse and validation failures, 2 for failures while solving
    /// or writing results.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Syntax { .. } | CliError::Input { .. } | CliError::Invalid(_) => 1,
            CliError::Output { .. } => 2,
            CliError::Core(e) => match e {
                MonaError::NewtonDivergence { .. } | MonaError::SingularMatrix { .. } | MonaError::NonFinite(_) => 2,
                _ => 1,
            },
        }
    }
}
