use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dm::{diebold_mariano, Verdict};
use super::grid::{grid_search, Grid};
use super::metrics::{mase_with, MaseOptions};
use crate::corrector::{kclstm_fit, CorrectionConfig};
use crate::data::{TimeSeries, M4_MONTHLY_HORIZON};
use crate::error::{argument, Result};
use crate::lstm::{forecast, train, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub train: TrainConfig,
    pub correction: CorrectionConfig,
    /// Tune learning rate and batch size per series before the comparison.
    pub grid: Option<Grid>,
    pub validation_fraction: f64,
    pub dm_horizon: usize,
    pub mase: MaseOptions,
    /// Series evaluated concurrently. Keep at 1 for comparable timings.
    pub workers: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            correction: CorrectionConfig::default(),
            grid: None,
            validation_fraction: 0.2,
            dm_horizon: M4_MONTHLY_HORIZON,
            mase: MaseOptions::default(),
            workers: 1,
        }
    }
}

/// One series' comparison. In the Diebold-Mariano verdict, A is the baseline
/// LSTM and B is the corrector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub series_id: String,
    pub length: usize,
    pub split_index: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub mase_lstm: f64,
    pub mase_kclstm: f64,
    pub dm_statistic: f64,
    pub dm_p_value: f64,
    pub verdict: Verdict,
    pub lstm_seconds: f64,
    pub kclstm_seconds: f64,
    pub flagged: usize,
    /// Corrected points whose value changed.
    pub changed: usize,
    pub restored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFailure {
    pub series_id: String,
    pub error: String,
}

/// MASE distribution and mean training time of one algorithm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (zero for a single series).
    pub std_dev: f64,
    pub mean_seconds: f64,
}

impl AlgorithmSummary {
    pub fn from_values(mase: &[f64], seconds: &[f64]) -> Self {
        if mase.is_empty() {
            return Self::default();
        }
        let n = mase.len() as f64;
        let mean = mase.iter().sum::<f64>() / n;
        let mut sorted = mase.to_vec();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        };
        let std_dev = if k > 1 {
            (mase.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            median,
            std_dev,
            mean_seconds: seconds.iter().sum::<f64>() / seconds.len() as f64,
        }
    }
}

/// Per-series comparisons plus aggregates that are always recomputable from
/// the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<SeriesResult>,
    pub failures: Vec<SeriesFailure>,
    pub lstm: AlgorithmSummary,
    pub kclstm: AlgorithmSummary,
    /// Diebold-Mariano tallies.
    pub kclstm_wins: usize,
    pub lstm_wins: usize,
    pub draws: usize,
    /// Series where the corrector's MASE is strictly lower.
    pub kclstm_lower_mase: usize,
}

impl EvalReport {
    pub fn from_rows(rows: Vec<SeriesResult>, failures: Vec<SeriesFailure>) -> Self {
        let col = |f: fn(&SeriesResult) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        let lstm = AlgorithmSummary::from_values(&col(|r| r.mase_lstm), &col(|r| r.lstm_seconds));
        let kclstm =
            AlgorithmSummary::from_values(&col(|r| r.mase_kclstm), &col(|r| r.kclstm_seconds));
        let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
        Self {
            lstm,
            kclstm,
            kclstm_wins: count(Verdict::WinB),
            lstm_wins: count(Verdict::WinA),
            draws: count(Verdict::Draw),
            kclstm_lower_mase: rows.iter().filter(|r| r.mase_kclstm < r.mase_lstm).count(),
            rows,
            failures,
        }
    }

    pub fn evaluated(&self) -> usize {
        self.rows.len()
    }
}

/// Runs the baseline LSTM and the corrector with the same configuration and
/// seed on every series and scores both on the untouched test split. Timings
/// cover training and correction only. A failing series is recorded and the
/// run continues.
pub fn benchmark(series_set: &[TimeSeries], cfg: &BenchmarkConfig) -> Result<EvalReport> {
    if series_set.is_empty() {
        return Err(argument("benchmark needs at least one series"));
    }
    cfg.train.validate()?;
    cfg.correction.validate()?;
    let run = |s: &TimeSeries| evaluate_series(s, cfg).map_err(|e| SeriesFailure {
        series_id: s.id().to_string(),
        error: e.to_string(),
    });
    let outcomes: Vec<std::result::Result<SeriesResult, SeriesFailure>> = if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| argument(format!("cannot start worker pool: {e}")))?;
        pool.install(|| series_set.par_iter().map(run).collect())
    } else {
        series_set.iter().map(run).collect()
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(f) => {
                log::warn!("series {} failed: {}", f.series_id, f.error);
                failures.push(f);
            }
        }
    }
    Ok(EvalReport::from_rows(rows, failures))
}

fn evaluate_series(series: &TimeSeries, cfg: &BenchmarkConfig) -> Result<SeriesResult> {
    let train_cfg = match &cfg.grid {
        Some(grid) => grid_search(series, &cfg.train, grid, cfg.validation_fraction)?.best,
        None => cfg.train.clone(),
    };
    let horizon = series.test().len();
    let test = series.test();
    let s = series.split_index();

    let t0 = Instant::now();
    let baseline = train(series, &train_cfg)?;
    let lstm_seconds = t0.elapsed().as_secs_f64();
    let fc_lstm = forecast(&baseline.model, series, horizon)?;

    let t1 = Instant::now();
    let fit = kclstm_fit(series, &train_cfg, &cfg.correction)?;
    let kclstm_seconds = t1.elapsed().as_secs_f64();
    let fc_kc = forecast(&fit.model, &fit.corrected, horizon)?;

    let mase_lstm = mase_with(&fc_lstm, test, series.values(), s, cfg.mase)?;
    let mase_kclstm = mase_with(&fc_kc, test, series.values(), s, cfg.mase)?;
    let err = |fc: &[f64]| fc.iter().zip(test).map(|(f, y)| f - y).collect::<Vec<_>>();
    let dm = diebold_mariano(&err(&fc_lstm), &err(&fc_kc), cfg.dm_horizon)?;

    Ok(SeriesResult {
        series_id: series.id().to_string(),
        length: series.len(),
        split_index: s,
        learning_rate: train_cfg.learning_rate,
        batch_size: train_cfg.batch_size,
        mase_lstm,
        mase_kclstm,
        dm_statistic: dm.statistic,
        dm_p_value: dm.p_value,
        verdict: dm.verdict,
        lstm_seconds,
        kclstm_seconds,
        flagged: fit.report.flagged.len(),
        changed: fit.report.changed().count(),
        restored: fit.report.restored.len(),
    })
}
