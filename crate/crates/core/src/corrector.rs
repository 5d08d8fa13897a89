//! Three-phase corrector: train a baseline LSTM, rewrite training points whose
//! hidden state strays from its kernel-smoothed estimate, retrain on the
//! repaired series.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::TimeSeries;
use crate::dynamics::{dtw_distance, smooth_trace, trace_divergences, HiddenTrace, SmoothingConfig};
use crate::error::{argument, check_len, KcError, Result};
use crate::lstm::{cell_forward, forward_sequence, train, LstmModel, LstmState, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionConfig {
    /// A point is flagged when its divergence exceeds this.
    pub detection_threshold: f64,
    /// A correction is accepted once the divergence is at most this.
    pub correction_threshold: f64,
    /// Search iterations per point before the original value is restored.
    pub max_iters: usize,
    /// First search step, in scaled (`[0, 1]`) units.
    pub step_init: f64,
    pub smoothing: SmoothingConfig,
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self {
            detection_threshold: 0.6,
            correction_threshold: 0.5,
            max_iters: 50,
            step_init: 0.1,
            smoothing: SmoothingConfig::default(),
        }
    }
}

impl CorrectionConfig {
    pub fn validate(&self) -> Result<()> {
        let (dd, dc) = (self.detection_threshold, self.correction_threshold);
        if !(dd >= 0.0 && dc >= 0.0) || dd.is_nan() || dc.is_nan() {
            return Err(argument("thresholds must be non-negative"));
        }
        if dc > dd {
            return Err(argument(format!(
                "correction threshold {dc} exceeds detection threshold {dd}"
            )));
        }
        if !(self.step_init.is_finite() && self.step_init > 0.0) {
            return Err(argument("initial correction step must be positive"));
        }
        self.smoothing.validate()
    }
}

/// A flagged point whose search met the correction threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedPoint {
    pub index: usize,
    pub old_value: f64,
    pub new_value: f64,
    pub old_scaled: f64,
    pub new_scaled: f64,
    pub iterations: usize,
    pub final_divergence: f64,
}

/// A flagged point that ran out of iterations and kept its original value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoredPoint {
    pub index: usize,
    pub value: f64,
    pub iterations: usize,
    /// Best divergence the search reached.
    pub best_divergence: f64,
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub train_seconds: f64,
    pub correction_seconds: f64,
    pub retrain_seconds: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.train_seconds + self.correction_seconds + self.retrain_seconds
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub detection_threshold: f64,
    pub correction_threshold: f64,
    /// Largest divergence over the trace.
    pub max_divergence: f64,
    /// Flagged series positions, ascending.
    pub flagged: Vec<usize>,
    pub corrected: Vec<CorrectedPoint>,
    pub restored: Vec<RestoredPoint>,
    pub timings: PhaseTimings,
}

impl CorrectionReport {
    /// Corrected points whose value actually changed.
    pub fn changed(&self) -> impl Iterator<Item = &CorrectedPoint> {
        self.corrected.iter().filter(|c| c.old_value != c.new_value)
    }
}

/// Series positions whose divergence exceeds `threshold`, ascending.
pub fn detect(trace: &HiddenTrace, threshold: f64) -> Result<Vec<usize>> {
    Ok(trace_divergences(trace)?
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d > threshold)
        .map(|(row, _)| trace.first_position() + row)
        .collect())
}

/// Outcome of the search for one point, in scaled units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCorrection {
    pub new_value: f64,
    pub iterations: usize,
    pub final_divergence: f64,
    pub converged: bool,
}

/// Divergence of the state produced by the window ending at `i` when
/// `x_i = value`. `prefix` is the state after the first `L - 1` inputs of that
/// window, which the search never changes.
fn divergence_with(
    model: &LstmModel,
    prefix: &LstmState,
    value: f64,
    target_state: &[f64],
) -> Result<f64> {
    let state = cell_forward(&model.network.cell, &[value], prefix)?;
    dtw_distance(target_state, &state.hidden)
}

/// Greedy search over the single scalar `x_i` (scaled units).
///
/// Each iteration tries a step of at most the current size towards two anchors,
/// the midpoint of the neighbouring values and the phase-1 model's one-step
/// prediction of `x_i`, plus a plain step in either direction. The best
/// candidate is kept if it lowers `DTW(h'_i, h_i)`; otherwise the step is
/// halved. `h'_i` stays fixed while `h_i` is recomputed from the window ending
/// at `i`.
pub fn correct_point(
    model: &LstmModel,
    series_scaled: &[f64],
    i: usize,
    target_state: &[f64],
    cfg: &CorrectionConfig,
) -> Result<PointCorrection> {
    let l = model.window_length();
    if i + 1 < l || i >= series_scaled.len() {
        return Err(argument(format!(
            "position {i} has no full window of length {l} in a series of {}",
            series_scaled.len()
        )));
    }
    check_len("target hidden state", model.network.hidden_size(), target_state.len())?;

    let original = series_scaled[i];
    let prefix_inputs: Vec<Vec<f64>> = series_scaled[i + 1 - l..i].iter().map(|&v| vec![v]).collect();
    let (states, _) = forward_sequence(&model.network, &prefix_inputs)?;
    let prefix = states.last().expect("window length is at least 2");
    let mut best = divergence_with(model, prefix, original, target_state)?;
    if best <= cfg.correction_threshold {
        return Ok(PointCorrection {
            new_value: original,
            iterations: 0,
            final_divergence: best,
            converged: true,
        });
    }

    let left = series_scaled[i - 1];
    let midpoint = match series_scaled.get(i + 1) {
        Some(&right) => 0.5 * (left + right),
        None => left,
    };
    let (_, implied) = model.run_window(&series_scaled[i.saturating_sub(l)..i]);
    let anchors = [midpoint, implied];

    let mut x = original;
    let mut step = cfg.step_init;
    for iteration in 1..=cfg.max_iters {
        let mut candidates: Vec<f64> = anchors
            .iter()
            .map(|&a| x + (a - x).clamp(-step, step))
            .filter(|&c| c != x)
            .collect();
        candidates.extend([x + step, x - step]);

        let mut round_best: Option<(f64, f64)> = None;
        for c in candidates {
            let d = divergence_with(model, prefix, c, target_state)?;
            if round_best.is_none_or(|(_, bd)| d < bd) {
                round_best = Some((c, d));
            }
        }
        match round_best {
            Some((c, d)) if d < best => {
                x = c;
                best = d;
            }
            _ => step *= 0.5,
        }
        if best <= cfg.correction_threshold {
            return Ok(PointCorrection {
                new_value: x,
                iterations: iteration,
                final_divergence: best,
                converged: true,
            });
        }
    }
    Ok(PointCorrection {
        new_value: x,
        iterations: cfg.max_iters,
        final_divergence: best,
        converged: false,
    })
}

/// Smooths `trace`, flags divergent positions and corrects them in ascending
/// order, each accepted correction feeding the windows of later points.
/// Points that do not converge keep their original value. The test split is
/// never read or written.
pub fn run_correction(
    model: &LstmModel,
    series: &TimeSeries,
    trace: &HiddenTrace,
    cfg: &CorrectionConfig,
) -> Result<(TimeSeries, CorrectionReport)> {
    correct_series(model, series, trace, cfg).map(|(s, r, _)| (s, r))
}

fn correct_series(
    model: &LstmModel,
    series: &TimeSeries,
    trace: &HiddenTrace,
    cfg: &CorrectionConfig,
) -> Result<(TimeSeries, CorrectionReport, HiddenTrace)> {
    cfg.validate()?;
    let started = Instant::now();
    let smoothed = smooth_trace(trace, &cfg.smoothing)?;
    let divergences = trace_divergences(&smoothed)?;
    let flagged = detect(&smoothed, cfg.detection_threshold)?;
    let targets = smoothed.smoothed().expect("smoothed above");

    let train = series.train();
    let mut working = model.scaler.scale_all(train);
    let mut values = train.to_vec();
    let mut report = CorrectionReport {
        detection_threshold: cfg.detection_threshold,
        correction_threshold: cfg.correction_threshold,
        max_divergence: divergences.iter().copied().fold(0.0, f64::max),
        flagged: flagged.clone(),
        ..CorrectionReport::default()
    };

    for &i in &flagged {
        let row = smoothed.row_of(i).expect("flagged positions come from the trace");
        let pc = correct_point(model, &working, i, targets.row(row), cfg)?;
        if pc.converged {
            let old_scaled = working[i];
            let new_value = if pc.iterations == 0 {
                values[i]
            } else {
                model.scaler.inverse(pc.new_value)
            };
            report.corrected.push(CorrectedPoint {
                index: i,
                old_value: values[i],
                new_value,
                old_scaled,
                new_scaled: pc.new_value,
                iterations: pc.iterations,
                final_divergence: pc.final_divergence,
            });
            working[i] = pc.new_value;
            values[i] = new_value;
        } else {
            report.restored.push(RestoredPoint {
                index: i,
                value: values[i],
                iterations: pc.iterations,
                best_divergence: pc.final_divergence,
            });
        }
    }

    let corrected = series.with_train_values(values)?;
    if corrected.test().iter().map(|v| v.to_bits()).ne(series.test().iter().map(|v| v.to_bits())) {
        return Err(KcError::State("correction touched the test split".into()));
    }
    report.timings.correction_seconds = started.elapsed().as_secs_f64();
    Ok((corrected, report, smoothed))
}

/// Output of [`kclstm_fit`].
#[derive(Debug, Clone)]
pub struct KcLstmFit {
    /// Model retrained on the corrected series; this is the forecaster.
    pub model: LstmModel,
    pub phase1_model: LstmModel,
    /// Original test split with a corrected training split.
    pub corrected: TimeSeries,
    pub report: CorrectionReport,
    /// Phase-1 hidden trace with its smoothed estimates.
    pub trace: HiddenTrace,
}

/// Train, correct, retrain. The retraining starts from the same seeded
/// initialization as phase 1.
pub fn kclstm_fit(
    series: &TimeSeries,
    train_cfg: &TrainConfig,
    corr_cfg: &CorrectionConfig,
) -> Result<KcLstmFit> {
    corr_cfg.validate()?;
    let t0 = Instant::now();
    let phase1 = train(series, train_cfg)?;
    let train_seconds = t0.elapsed().as_secs_f64();

    let (corrected, mut report, trace) =
        correct_series(&phase1.model, series, &phase1.trace, corr_cfg)?;

    let t2 = Instant::now();
    let phase3 = train(&corrected, train_cfg)?;
    report.timings.train_seconds = train_seconds;
    report.timings.retrain_seconds = t2.elapsed().as_secs_f64();
    Ok(KcLstmFit {
        model: phase3.model,
        phase1_model: phase1.model,
        corrected,
        report,
        trace,
    })
}
