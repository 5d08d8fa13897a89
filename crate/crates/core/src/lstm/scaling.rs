use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};

/// Min-max scaling of the training split onto `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
    pub lower: f64,
    pub upper: f64,
}

impl MinMaxScaler {
    /// Fits onto `[0, 1]`.
    pub fn fit(values: &[f64]) -> Result<Self> {
        Self::fit_to(values, [0.0, 1.0])
    }

    pub fn fit_to(values: &[f64], range: [f64; 2]) -> Result<Self> {
        let [lower, upper] = range;
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(argument(format!("invalid scaling range [{lower}, {upper}]")));
        }
        if values.is_empty() {
            return Err(argument("cannot fit a scaler on an empty slice"));
        }
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Ok(Self {
            min,
            max,
            lower,
            upper,
        })
    }

    /// Constant training data maps to zero with a unit span.
    fn span(&self) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            span
        } else {
            1.0
        }
    }

    fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn scale(&self, x: f64) -> f64 {
        (x - self.min) / self.span() * self.width() + self.lower
    }

    pub fn inverse(&self, y: f64) -> f64 {
        (y - self.lower) / self.width() * self.span() + self.min
    }

    pub fn scale_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.scale(x)).collect()
    }

    pub fn inverse_all(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.inverse(y)).collect()
    }
}

/// One training example: `window_length` scaled inputs and the next value.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub inputs: Vec<f64>,
    pub target: f64,
    /// Position of `target` in the source series.
    pub origin_index: usize,
}

/// Stride-one sliding windows over a scaled training split.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub windows: Vec<Window>,
    pub scaler: MinMaxScaler,
    pub window_length: usize,
}

impl WindowSet {
    /// Fits the scaler on `train` and cuts every full window.
    pub fn from_train(train: &[f64], window_length: usize, range: [f64; 2]) -> Result<Self> {
        if window_length < 2 {
            return Err(argument(format!(
                "window length must be at least 2 (got {window_length})"
            )));
        }
        if train.len() <= window_length {
            return Err(argument(format!(
                "training split of length {} is too short for window length {window_length}",
                train.len()
            )));
        }
        let scaler = MinMaxScaler::fit_to(train, range)?;
        let scaled = scaler.scale_all(train);
        Ok(Self {
            windows: windows_of(&scaled, window_length),
            scaler,
            window_length,
        })
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

pub(crate) fn windows_of(scaled: &[f64], window_length: usize) -> Vec<Window> {
    (window_length..scaled.len())
        .map(|t| Window {
            inputs: scaled[t - window_length..t].to_vec(),
            target: scaled[t],
            origin_index: t,
        })
        .collect()
}
