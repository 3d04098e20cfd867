use std::path::PathBuf;

/// Errors surfaced by the command-line pipeline. The process exit code is
/// derived from the variant: validation and data problems exit 1, usage
/// and I/O problems exit 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(#[from] sewercast_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Csv { path: PathBuf, line: usize, message: String },
    #[error("{path}: parse error at byte {offset}: {message}")]
    Checkpoint { path: PathBuf, offset: usize, message: String },
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) | CliError::Csv { .. } | CliError::Checkpoint { .. } => 1,
            CliError::Io { .. } | CliError::Usage(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
