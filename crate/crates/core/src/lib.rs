//! Kernel corrector LSTM.
//!
//! A baseline LSTM is trained on a series, the hidden state it produces at
//! every training position is compared with a Gaussian-kernel estimate built
//! from neighbouring states, points whose state diverges too far are rewritten
//! until the divergence is acceptable, and the LSTM is retrained on the
//! repaired data. The crate also carries the evaluation harness used to compare
//! the corrected forecaster with the baseline: holdout splits, MASE,
//! the Diebold-Mariano test, grid search and timed benchmarks.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_range_contains)]

pub mod corrector;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod lstm;

pub use corrector::{kclstm_fit, CorrectionConfig, CorrectionReport, KcLstmFit};
pub use data::{Provenance, TimeSeries};
pub use dynamics::{HiddenTrace, SmoothingConfig};
pub use error::{KcError, Result};
pub use evaluation::{EvalReport, Verdict};
pub use lstm::{forecast, train, LstmModel, TrainConfig};
