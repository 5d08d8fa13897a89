use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the forecasting, correction and evaluation pipeline.
#[derive(Debug, Error)]
pub enum KcError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("invalid state: {0}")]
    State(String),

    #[error("MASE is undefined: the naive in-sample error is zero")]
    UndefinedMase,

    #[error("all grid cells failed: {}", .0.join("; "))]
    GridExhausted(Vec<String>),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

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

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, KcError>;

pub(crate) fn argument(msg: impl Into<String>) -> KcError {
    KcError::Argument(msg.into())
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(KcError::Dimension {
            context,
            expected,
            actual,
        })
    }
}
