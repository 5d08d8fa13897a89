use std::path::PathBuf;

use kclstm_core::KcError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] KcError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("no series could be evaluated ({0} failed)")]
    NothingEvaluated(usize),
}

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

impl CliError {
    /// Configuration problems found before any work starts.
    pub fn usage(err: KcError) -> Self {
        match err {
            KcError::Argument(msg) => Self::Usage(msg),
            other => Self::Usage(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Core(KcError::Divergence { .. } | KcError::GridExhausted(_)) => EXIT_DIVERGENCE,
            Self::Core(_) | Self::Io { .. } | Self::Json { .. } | Self::NothingEvaluated(_) => {
                EXIT_DATA
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
