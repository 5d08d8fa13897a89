use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::mase;
use crate::data::TimeSeries;
use crate::error::{argument, KcError, Result};
use crate::lstm::{forecast_from, train_on_values, TrainConfig};

pub const DEFAULT_LEARNING_RATES: [f64; 4] = [0.0001, 0.001, 0.01, 0.1];
pub const DEFAULT_BATCH_SIZES: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            learning_rates: DEFAULT_LEARNING_RATES.to_vec(),
            batch_sizes: DEFAULT_BATCH_SIZES.to_vec(),
        }
    }
}

impl Grid {
    pub fn cells(&self) -> Vec<(f64, usize)> {
        self.learning_rates
            .iter()
            .flat_map(|&lr| self.batch_sizes.iter().map(move |&b| (lr, b)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Validation MASE, or the reason the cell failed.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchOutcome {
    pub best: TrainConfig,
    pub cells: Vec<GridCell>,
}

/// Holds out the last `validation_fraction` of the training split, trains one
/// model per `(learning_rate, batch_size)` cell on the rest and keeps the cell
/// with the lowest validation MASE. Ties go to the lower learning rate, then
/// the smaller batch.
pub fn grid_search(
    series: &TimeSeries,
    base: &TrainConfig,
    grid: &Grid,
    validation_fraction: f64,
) -> Result<GridSearchOutcome> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(argument("grid search needs at least one cell"));
    }
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(argument(format!(
            "validation fraction must lie in (0, 1), got {validation_fraction}"
        )));
    }
    let train = series.train();
    let n_val = ((train.len() as f64 * validation_fraction).round() as usize).max(1);
    if n_val >= train.len() {
        return Err(argument("validation split leaves no training data"));
    }
    let fit_len = train.len() - n_val;

    let evaluated: Vec<GridCell> = cells
        .par_iter()
        .map(|&(lr, batch)| {
            let cfg = TrainConfig {
                learning_rate: lr,
                batch_size: batch,
                ..base.clone()
            };
            let outcome = train_on_values(&train[..fit_len], &cfg)
                .and_then(|out| forecast_from(&out.model, &train[..fit_len], n_val))
                .and_then(|fc| mase(&fc, &train[fit_len..], train, fit_len))
                .map_err(|e| e.to_string());
            GridCell {
                learning_rate: lr,
                batch_size: batch,
                outcome,
            }
        })
        .collect();

    let best = evaluated
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok().map(|&m| (m, c)))
        .min_by(|(ma, a), (mb, b)| {
            ma.total_cmp(mb)
                .then(a.learning_rate.total_cmp(&b.learning_rate))
                .then(a.batch_size.cmp(&b.batch_size))
        })
        .map(|(_, c)| c);
    match best {
        Some(c) => Ok(GridSearchOutcome {
            best: TrainConfig {
                learning_rate: c.learning_rate,
                batch_size: c.batch_size,
                ..base.clone()
            },
            cells: evaluated,
        }),
        None => Err(KcError::GridExhausted(
            evaluated
                .iter()
                .map(|c| {
                    format!(
                        "lr={} batch={}: {}",
                        c.learning_rate,
                        c.batch_size,
                        c.outcome.as_ref().err().map_or("", String::as_str)
                    )
                })
                .collect(),
        )),
    }
}
