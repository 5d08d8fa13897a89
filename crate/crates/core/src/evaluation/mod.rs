//! Holdout scoring, significance testing, tuning and timed comparisons.

mod benchmark;
mod dm;
mod grid;
mod metrics;

pub use benchmark::{
    benchmark, AlgorithmSummary, BenchmarkConfig, EvalReport, SeriesFailure, SeriesResult,
};
pub use dm::{autocovariance, critical_value, diebold_mariano, DmResult, Verdict, DM_ALPHA};
pub use grid::{
    grid_search, Grid, GridCell, GridSearchOutcome, DEFAULT_BATCH_SIZES, DEFAULT_LEARNING_RATES,
};
pub use metrics::{holdout_split, mase, mase_with, MaseDenominator, MaseOptions};
