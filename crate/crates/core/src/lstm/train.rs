//! Mini-batch training, hidden-trace capture and recursive forecasting.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cell::run_scalar_window;
use super::grad::accumulate_gradients;
use super::params::Network;
use super::scaling::{MinMaxScaler, WindowSet};
use crate::data::TimeSeries;
use crate::dynamics::HiddenTrace;
use crate::error::{argument, KcError, Result};
use crate::linalg::Matrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = KcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            other => Err(argument(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Upper bound on epochs; early stopping may end training sooner.
    pub epochs: usize,
    pub window_length: usize,
    pub hidden_size: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Stop once the epoch MSE improved by less than `early_stop_min_delta`
    /// over this many epochs. Zero disables early stopping.
    pub early_stop_patience: usize,
    pub early_stop_min_delta: f64,
    /// Interval the training split is min-max scaled onto.
    pub scale_range: [f64; 2],
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 8,
            epochs: 100,
            window_length: 12,
            hidden_size: 32,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            early_stop_patience: 10,
            early_stop_min_delta: 1e-6,
            scale_range: [0.0, 1.0],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(argument(format!(
                "learning rate must be positive (got {})",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(argument("batch size must be at least 1"));
        }
        if self.window_length < 2 {
            return Err(argument("window length must be at least 2"));
        }
        if self.hidden_size == 0 {
            return Err(argument("hidden size must be at least 1"));
        }
        if !(self.early_stop_min_delta >= 0.0) {
            return Err(argument("early-stop delta must be non-negative"));
        }
        Ok(())
    }
}

/// A trained forecaster with everything needed to reproduce its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub format_version: u32,
    pub network: Network,
    pub scaler: MinMaxScaler,
    pub config: TrainConfig,
    /// Mean squared error (scaled units) of each completed epoch.
    pub loss_history: Vec<f64>,
    /// MSE of the final parameters over all training windows.
    pub final_loss: f64,
}

impl LstmModel {
    pub fn window_length(&self) -> usize {
        self.config.window_length
    }

    pub fn epochs_run(&self) -> usize {
        self.loss_history.len()
    }

    /// Hidden state and scaled prediction for a scaled input window.
    pub fn run_window(&self, scaled_window: &[f64]) -> (Vec<f64>, f64) {
        run_scalar_window(&self.network, scaled_window)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|source| KcError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, json).map_err(|source| KcError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| KcError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let model: Self = serde_json::from_str(&text).map_err(|source| KcError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(KcError::State(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        if !model.network.is_finite() {
            return Err(KcError::State("model contains non-finite weights".into()));
        }
        Ok(model)
    }
}

/// Result of one baseline training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LstmModel,
    /// Hidden state for every training position with a full window behind it.
    pub trace: HiddenTrace,
}

/// Trains a baseline LSTM on the training split of `series`.
pub fn train(series: &TimeSeries, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_on_values(series.train(), cfg)
}

/// Trains on a raw training split.
///
/// Windows are visited in a seeded random order each epoch and the gradient is
/// averaged over each mini-batch. The hidden trace is taken from the parameters
/// left by the final epoch.
pub fn train_on_values(train: &[f64], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let windows = WindowSet::from_train(train, cfg.window_length, cfg.scale_range)?;
    let mut net = Network::init(cfg.seed, cfg.hidden_size, 1)?;
    let mut optimizer = Optimizer::new(cfg, net.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5e_ed0f_ba7c);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut grads = Network::zeros(cfg.hidden_size, 1);
    let mut history: Vec<f64> = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.fill_zero();
            for &w in batch {
                let window = &windows.windows[w];
                let (loss, _) =
                    accumulate_gradients(&net, window.inputs.chunks(1), window.target, &mut grads);
                total += loss;
            }
            grads.scale(1.0 / batch.len() as f64);
            optimizer.step(&mut net, &grads);
        }
        let mse = total / windows.len() as f64;
        if !mse.is_finite() || !net.is_finite() {
            return Err(KcError::Divergence {
                epoch: epoch + 1,
                loss: mse,
            });
        }
        history.push(mse);
        let patience = cfg.early_stop_patience;
        if patience > 0 && history.len() > patience {
            let then = history[history.len() - 1 - patience];
            if then - mse < cfg.early_stop_min_delta {
                break;
            }
        }
    }

    let scaled = windows.scaler.scale_all(train);
    let (trace, final_loss) = sweep(&net, &scaled, cfg.window_length)?;
    if !final_loss.is_finite() {
        return Err(KcError::Divergence {
            epoch: history.len(),
            loss: final_loss,
        });
    }
    Ok(TrainOutcome {
        model: LstmModel {
            format_version: MODEL_FORMAT_VERSION,
            network: net,
            scaler: windows.scaler,
            config: cfg.clone(),
            loss_history: history,
            final_loss,
        },
        trace,
    })
}

/// Forward pass over every full window of `scaled`. The state recorded for
/// position `p` is the last hidden state of the window ending at `p`, i.e. the
/// state produced by consuming `x_p`. Also returns the MSE over the windows
/// that have a next value to predict.
fn sweep(net: &Network, scaled: &[f64], window_length: usize) -> Result<(HiddenTrace, f64)> {
    let first = window_length - 1;
    let mut rows = Vec::with_capacity(scaled.len() - first);
    let mut sq = 0.0;
    let mut count = 0usize;
    for p in first..scaled.len() {
        let (h, y) = run_scalar_window(net, &scaled[p + 1 - window_length..=p]);
        if let Some(&next) = scaled.get(p + 1) {
            sq += (y - next) * (y - next);
            count += 1;
        }
        rows.push(h);
    }
    let trace = HiddenTrace::new(first, Matrix::from_rows(&rows)?)?;
    Ok((trace, sq / count.max(1) as f64))
}

/// Recursive multi-step forecast in original units, continuing from the end of
/// the training split of `series`.
pub fn forecast(model: &LstmModel, series: &TimeSeries, horizon: usize) -> Result<Vec<f64>> {
    forecast_from(model, series.train(), horizon)
}

/// Recursive forecast continuing `history` (original units).
pub fn forecast_from(model: &LstmModel, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    if horizon < 1 {
        return Err(argument("forecast horizon must be at least 1"));
    }
    let l = model.window_length();
    if history.len() < l {
        return Err(argument(format!(
            "need at least {l} history values to forecast, got {}",
            history.len()
        )));
    }
    let mut window = model.scaler.scale_all(&history[history.len() - l..]);
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let (_, y) = model.run_window(&window);
        out.push(model.scaler.inverse(y));
        window.remove(0);
        window.push(y);
    }
    Ok(out)
}

enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        m: Vec<f64>,
        v: Vec<f64>,
        t: i32,
    },
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Optimizer {
    fn new(cfg: &TrainConfig, n_params: usize) -> Self {
        match cfg.optimizer {
            OptimizerKind::Sgd => Self::Sgd {
                lr: cfg.learning_rate,
            },
            OptimizerKind::Adam => Self::Adam {
                lr: cfg.learning_rate,
                m: vec![0.0; n_params],
                v: vec![0.0; n_params],
                t: 0,
            },
        }
    }

    fn step(&mut self, net: &mut Network, grads: &Network) {
        let grad_blocks = grads.blocks();
        match self {
            Self::Sgd { lr } => {
                for (p, g) in net.blocks_mut().into_iter().zip(grad_blocks) {
                    for (pi, gi) in p.iter_mut().zip(g) {
                        *pi -= *lr * gi;
                    }
                }
            }
            Self::Adam { lr, m, v, t } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                let mut k = 0;
                for (p, g) in net.blocks_mut().into_iter().zip(grad_blocks) {
                    for (pi, &gi) in p.iter_mut().zip(g) {
                        m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * gi;
                        v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * gi * gi;
                        let m_hat = m[k] / c1;
                        let v_hat = v[k] / c2;
                        *pi -= *lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                        k += 1;
                    }
                }
            }
        }
    }
}
