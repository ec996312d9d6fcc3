use std::path::PathBuf;

/// Exit status for a run that completed.
pub const EXIT_OK: i32 = 0;
/// `verify` ran but at least one check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Bad config, flags, input files or preconditions.
pub const EXIT_VALIDATION: i32 = 2;
/// Numerical breakdown (aliasing risk, factorization failure).
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] metaplectic_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
