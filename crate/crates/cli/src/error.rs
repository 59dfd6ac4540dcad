use std::path::PathBuf;

use canham_core::Error as CoreError;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    Failure = 1,
    Usage = 2,
    Breakdown = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Json(_) => ExitStatus::Usage,
            CliError::Csv(_) => ExitStatus::Breakdown,
            CliError::Core(e) => match e {
                CoreError::K5Violation { .. } => ExitStatus::Failure,
                CoreError::LinearSolveFailure { .. } | CoreError::NearSingular { .. } => {
                    ExitStatus::Breakdown
                }
                CoreError::InvalidSpec(_)
                | CoreError::Domain { .. }
                | CoreError::InvalidInterval { .. }
                | CoreError::KinkPoint { .. } => ExitStatus::Usage,
            },
        }
    }
}
