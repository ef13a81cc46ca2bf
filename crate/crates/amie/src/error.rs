use std::io;
use std::path::PathBuf;

use crate::formats::FormatError;

/// Failures surfaced by the harness and CLI, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Format { context: String, source: FormatError },
    #[error("{context}: {source}")]
    Core { context: String, source: amie_core::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn core(context: impl Into<String>, source: amie_core::Error) -> Self {
        Self::Core { context: context.into(), source }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 1 usage, 2 data, 3 invariant failure.
    pub fn exit_code(&self) -> u8 {
        use amie_core::Error as E;
        match self {
            Self::Usage(_) => 1,
            Self::Core { source: E::InvalidArgument(_) | E::EdgeCapacity { .. }, .. } => 1,
            Self::Core { source: E::Contract(_), .. } | Self::Invariant(_) => 3,
            _ => 2,
        }
    }
}

/// Attaches a context string to core errors.
pub trait CoreContext<T> {
    fn context(self, what: impl FnOnce() -> String) -> AppResult<T>;
}

impl<T> CoreContext<T> for amie_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> AppResult<T> {
        self.map_err(|e| AppError::core(what(), e))
    }
}

impl<T> CoreContext<T> for Result<T, FormatError> {
    fn context(self, what: impl FnOnce() -> String) -> AppResult<T> {
        self.map_err(|source| AppError::Format { context: what(), source })
    }
}
