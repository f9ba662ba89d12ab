use std::io;

use convdom_core::Error as CoreError;

/// Failure of a run, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(#[source] CoreError),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parse(_) => 2,
            RunError::Validation(_) => 3,
            RunError::Numerical(_) => 4,
            RunError::Invariant(_) => 5,
            RunError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Parse(s) => RunError::Parse(s),
            CoreError::InvalidArgument(s) => RunError::Validation(s),
            CoreError::GridMismatch { .. }
            | CoreError::TilingMismatch
            | CoreError::WindowMismatch
            | CoreError::OutsideWindow(_)
            | CoreError::OffGrid { .. } => RunError::Validation(e.to_string()),
            other => RunError::Numerical(other),
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;
