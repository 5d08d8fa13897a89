//! Hidden-state dynamics: Gaussian kernel smoothing of a hidden-state trace
//! and the DTW divergence between each state and its smoothed estimate.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{argument, check_len, KcError, Result};
use crate::linalg::{squared_distance, Matrix};

/// Floor applied to the median-heuristic bandwidth.
pub const MIN_BANDWIDTH: f64 = 1e-8;

/// Per-position hidden states `h_i` and, once smoothed, their estimates `h'_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenTrace {
    /// Series position of row 0.
    first_position: usize,
    states: Matrix,
    smoothed: Option<Matrix>,
}

impl HiddenTrace {
    pub fn new(first_position: usize, states: Matrix) -> Result<Self> {
        if states.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(argument("hidden trace contains non-finite values"));
        }
        Ok(Self {
            first_position,
            states,
            smoothed: None,
        })
    }

    pub fn with_smoothed(mut self, smoothed: Matrix) -> Result<Self> {
        if smoothed.shape() != self.states.shape() {
            return Err(KcError::Dimension {
                context: "smoothed trace rows",
                expected: self.states.rows(),
                actual: smoothed.rows(),
            });
        }
        self.smoothed = Some(smoothed);
        Ok(self)
    }

    pub fn first_position(&self) -> usize {
        self.first_position
    }

    /// Number of positions.
    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.rows() == 0
    }

    pub fn hidden_size(&self) -> usize {
        self.states.cols()
    }

    pub fn states(&self) -> &Matrix {
        &self.states
    }

    pub fn smoothed(&self) -> Option<&Matrix> {
        self.smoothed.as_ref()
    }

    /// Series positions covered by the trace.
    pub fn positions(&self) -> std::ops::Range<usize> {
        self.first_position..self.first_position + self.len()
    }

    /// Row holding series position `position`.
    pub fn row_of(&self, position: usize) -> Option<usize> {
        self.positions()
            .contains(&position)
            .then(|| position - self.first_position)
    }
}

/// Kernel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    /// Median distance from `h_i` to its window neighbours, per position.
    MedianHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    /// Even window width `W`; neighbours are `j ∈ [i - W/2, i + W/2]`, `j ≠ i`.
    pub window: usize,
    pub bandwidth: Bandwidth,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            window: 12,
            bandwidth: Bandwidth::MedianHeuristic,
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 || !self.window.is_multiple_of(2) {
            return Err(argument(format!(
                "smoothing window must be even and at least 2 (got {})",
                self.window
            )));
        }
        if let Bandwidth::Fixed(s) = self.bandwidth {
            if !(s.is_finite() && s > 0.0) {
                return Err(argument(format!("bandwidth must be positive (got {s})")));
            }
        }
        Ok(())
    }
}

/// `exp(-‖a - b‖² / (2σ²))`
pub fn gaussian_kernel(a: &[f64], b: &[f64], sigma: f64) -> Result<f64> {
    check_len("kernel operands", a.len(), b.len())?;
    if !(sigma > 0.0) {
        return Err(argument(format!("bandwidth must be positive (got {sigma})")));
    }
    Ok((-squared_distance(a, b) / (2.0 * sigma * sigma)).exp())
}

fn neighbours(i: usize, n: usize, half: usize) -> impl Iterator<Item = usize> {
    (i.saturating_sub(half)..=(i + half).min(n - 1)).filter(move |&j| j != i)
}

/// Bandwidth used at row `i`.
pub fn bandwidth_at(states: &Matrix, i: usize, cfg: &SmoothingConfig) -> f64 {
    match cfg.bandwidth {
        Bandwidth::Fixed(s) => s,
        Bandwidth::MedianHeuristic => {
            let hi = states.row(i);
            let mut dists: Vec<f64> = neighbours(i, states.rows(), cfg.window / 2)
                .map(|j| squared_distance(hi, states.row(j)).sqrt())
                .collect();
            dists.sort_by(f64::total_cmp);
            let m = dists.len();
            let median = if m % 2 == 1 {
                dists[m / 2]
            } else {
                0.5 * (dists[m / 2 - 1] + dists[m / 2])
            };
            median.max(MIN_BANDWIDTH)
        }
    }
}

/// Normalized kernel weights `(j, w_j)` that produce `h'_i`.
pub fn kernel_weights(trace: &HiddenTrace, row: usize, cfg: &SmoothingConfig) -> Result<Vec<(usize, f64)>> {
    cfg.validate()?;
    let states = trace.states();
    let n = states.rows();
    if n < 2 {
        return Err(argument("smoothing needs at least two positions"));
    }
    if row >= n {
        return Err(argument(format!("row {row} out of range for trace of {n}")));
    }
    Ok(weights_for(states, row, cfg))
}

fn weights_for(states: &Matrix, i: usize, cfg: &SmoothingConfig) -> Vec<(usize, f64)> {
    let sigma = bandwidth_at(states, i, cfg);
    let denom = 2.0 * sigma * sigma;
    let hi = states.row(i);
    // Exponents are shifted by their maximum before exponentiating so a tiny
    // bandwidth cannot underflow every weight to zero. The shift cancels in
    // the normalization.
    let logits: Vec<(usize, f64)> = neighbours(i, states.rows(), cfg.window / 2)
        .map(|j| (j, -squared_distance(hi, states.row(j)) / denom))
        .collect();
    let top = logits
        .iter()
        .map(|&(_, l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<(usize, f64)> = logits.iter().map(|&(j, l)| (j, (l - top).exp())).collect();
    let total: f64 = raw.iter().map(|&(_, w)| w).sum();
    raw.into_iter().map(|(j, w)| (j, w / total)).collect()
}

/// Fills `h'_i` for every position with the kernel-weighted mean of its
/// window neighbours (window truncated at the ends of the trace).
pub fn smooth_trace(trace: &HiddenTrace, cfg: &SmoothingConfig) -> Result<HiddenTrace> {
    cfg.validate()?;
    let states = trace.states();
    let (n, d) = states.shape();
    if n < 2 {
        return Err(argument("smoothing needs at least two positions"));
    }
    let mut smoothed = states.clone();
    let mut diff = vec![0.0; d];
    for i in 0..n {
        // h'_i = h_i + Σ w_j (h_j - h_i), which equals Σ w_j h_j because the
        // weights sum to one, and leaves identical neighbourhoods exact.
        let hi = states.row(i);
        let mut acc = vec![0.0; d];
        for (j, w) in weights_for(states, i, cfg) {
            for ((dk, &a), &b) in diff.iter_mut().zip(states.row(j)).zip(hi) {
                *dk = a - b;
            }
            crate::linalg::axpy(w, &diff, &mut acc);
        }
        for (o, a) in smoothed.row_mut(i).iter_mut().zip(&acc) {
            *o += a;
        }
    }
    trace.clone().with_smoothed(smoothed)
}

/// Dynamic time warping distance with `|a - b|` local cost and
/// match/insert/delete steps.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(argument("dtw_distance needs non-empty sequences"));
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        curr[0] = f64::INFINITY;
        for (j, &y) in b.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(curr[j]);
            curr[j + 1] = (x - y).abs() + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m])
}

/// `DTW(h'_i, h_i)` for every position.
pub fn trace_divergences(trace: &HiddenTrace) -> Result<Vec<f64>> {
    let smoothed = trace
        .smoothed()
        .ok_or_else(|| KcError::State("trace has not been smoothed".into()))?;
    smoothed
        .row_iter()
        .zip(trace.states().row_iter())
        .map(|(s, h)| dtw_distance(s, h))
        .collect()
}

/// Writes `position,coordinate,h,h_smoothed,divergence`, one row per
/// coordinate of every state.
pub fn write_trace_csv(trace: &HiddenTrace, path: &Path) -> Result<()> {
    let divergences = trace_divergences(trace)?;
    let smoothed = trace.smoothed().expect("checked by trace_divergences");
    let io_err = |source| KcError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "position,coordinate,h,h_smoothed,divergence").map_err(io_err)?;
    for (row, div) in divergences.iter().enumerate() {
        let pos = trace.first_position() + row;
        for c in 0..trace.hidden_size() {
            writeln!(
                w,
                "{pos},{c},{:?},{:?},{div:?}",
                trace.states().get(row, c),
                smoothed.get(row, c)
            )
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}
