//! Python bindings: synthetic series, training and forecasting, the
//! correction pipeline, and the evaluation and hidden-state utilities.

use std::path::PathBuf;

use kclstm_core as kc;
use kc::corrector::CorrectionConfig;
use kc::data::{SeriesKind, SynthSpec};
use kc::dynamics::{Bandwidth, HiddenTrace, SmoothingConfig};
use kc::linalg::Matrix;
use kc::lstm::{OptimizerKind, TrainConfig};
use kc::KcError;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: KcError) -> PyErr {
    match err {
        KcError::Argument(_) | KcError::Dimension { .. } | KcError::Parse { .. } => {
            PyValueError::new_err(err.to_string())
        }
        KcError::Divergence { .. } | KcError::UndefinedMase => {
            PyArithmeticError::new_err(err.to_string())
        }
        KcError::Io { .. } => PyOSError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

/// A univariate series with a train/test split.
#[pyclass(module = "kclstm", name = "Series", from_py_object)]
#[derive(Clone)]
pub struct PySeries {
    inner: kc::TimeSeries,
}

#[pymethods]
impl PySeries {
    #[new]
    fn new(id: String, values: Vec<f64>, split_index: usize) -> PyResult<Self> {
        kc::TimeSeries::new(id, values, split_index)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn id(&self) -> &str {
        self.inner.id()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn split_index(&self) -> usize {
        self.inner.split_index()
    }

    #[getter]
    fn train(&self) -> Vec<f64> {
        self.inner.train().to_vec()
    }

    #[getter]
    fn test(&self) -> Vec<f64> {
        self.inner.test().to_vec()
    }

    /// Noise-free values of a synthetic series, else `None`.
    #[getter]
    fn clean_values(&self) -> Option<Vec<f64>> {
        self.inner.clean_values().map(<[f64]>::to_vec)
    }

    /// Positions of injected spikes of a synthetic series, else `None`.
    #[getter]
    fn outlier_indices(&self) -> Option<Vec<usize>> {
        self.inner.outlier_indices().map(<[usize]>::to_vec)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Series(id={:?}, len={}, split_index={})",
            self.inner.id(),
            self.inner.len(),
            self.inner.split_index()
        )
    }
}

/// A trained LSTM forecaster.
#[pyclass(module = "kclstm", name = "Model", from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: kc::LstmModel,
}

#[pymethods]
impl PyModel {
    /// Recursive multi-step forecast following the series' training split.
    fn forecast(&self, series: &PySeries, horizon: usize) -> PyResult<Vec<f64>> {
        kc::forecast(&self.inner, &series.inner, horizon).map_err(to_py)
    }

    /// Forecast continuing an arbitrary history in original units.
    fn forecast_from(&self, history: Vec<f64>, horizon: usize) -> PyResult<Vec<f64>> {
        kc::lstm::forecast_from(&self.inner, &history, horizon).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        kc::LstmModel::load(&path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn final_loss(&self) -> f64 {
        self.inner.final_loss
    }

    #[getter]
    fn loss_history(&self) -> Vec<f64> {
        self.inner.loss_history.clone()
    }

    #[getter]
    fn epochs_run(&self) -> usize {
        self.inner.epochs_run()
    }

    #[getter]
    fn window_length(&self) -> usize {
        self.inner.window_length()
    }

    #[getter]
    fn hidden_size(&self) -> usize {
        self.inner.network.hidden_size()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(hidden_size={}, window_length={}, epochs_run={}, final_loss={:e})",
            self.inner.network.hidden_size(),
            self.inner.window_length(),
            self.inner.epochs_run(),
            self.inner.final_loss
        )
    }
}

/// Result of the train, correct, retrain pipeline.
#[pyclass(module = "kclstm", name = "Fit")]
pub struct PyFit {
    inner: kc::KcLstmFit,
}

#[pymethods]
impl PyFit {
    /// The retrained forecaster.
    #[getter]
    fn model(&self) -> PyModel {
        PyModel {
            inner: self.inner.model.clone(),
        }
    }

    #[getter]
    fn phase1_model(&self) -> PyModel {
        PyModel {
            inner: self.inner.phase1_model.clone(),
        }
    }

    #[getter]
    fn corrected(&self) -> PySeries {
        PySeries {
            inner: self.inner.corrected.clone(),
        }
    }

    #[getter]
    fn flagged(&self) -> Vec<usize> {
        self.inner.report.flagged.clone()
    }

    /// Positions whose value was changed.
    #[getter]
    fn changed(&self) -> Vec<usize> {
        self.inner.report.changed().map(|c| c.index).collect()
    }

    /// Flagged positions that kept their original value.
    #[getter]
    fn restored(&self) -> Vec<usize> {
        self.inner.report.restored.iter().map(|r| r.index).collect()
    }

    #[getter]
    fn max_divergence(&self) -> f64 {
        self.inner.report.max_divergence
    }

    /// Phase-1 hidden states, one row per trace position.
    #[getter]
    fn hidden_states(&self) -> Vec<Vec<f64>> {
        rows(self.inner.trace.states())
    }

    /// The full correction report as JSON.
    fn report_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

#[allow(clippy::too_many_arguments)]
fn train_config(
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    window_length: Option<usize>,
    hidden_size: Option<usize>,
    seed: Option<u64>,
    optimizer: Option<&str>,
) -> PyResult<TrainConfig> {
    let d = TrainConfig::default();
    let optimizer = match optimizer {
        Some(name) => name.parse::<OptimizerKind>().map_err(to_py)?,
        None => d.optimizer,
    };
    Ok(TrainConfig {
        learning_rate: learning_rate.unwrap_or(d.learning_rate),
        batch_size: batch_size.unwrap_or(d.batch_size),
        epochs: epochs.unwrap_or(d.epochs),
        window_length: window_length.unwrap_or(d.window_length),
        hidden_size: hidden_size.unwrap_or(d.hidden_size),
        seed: seed.unwrap_or(d.seed),
        optimizer,
        ..d
    })
}

fn bandwidth(sigma: Option<f64>) -> Bandwidth {
    sigma.map_or(Bandwidth::MedianHeuristic, Bandwidth::Fixed)
}

#[pyfunction]
#[pyo3(signature = (kind="sine", n=240, noise_sd=0.05, n_outliers=0, outlier_magnitude=8.0, seed=0, period=12, horizon=18, id="synthetic"))]
#[allow(clippy::too_many_arguments)]
fn synthesize(
    kind: &str,
    n: usize,
    noise_sd: f64,
    n_outliers: usize,
    outlier_magnitude: f64,
    seed: u64,
    period: usize,
    horizon: usize,
    id: &str,
) -> PyResult<PySeries> {
    let spec = SynthSpec {
        id: id.to_string(),
        kind: kind.parse::<SeriesKind>().map_err(to_py)?,
        n,
        noise_sd,
        n_outliers,
        outlier_magnitude,
        seed,
        period,
        horizon,
        ..SynthSpec::default()
    };
    kc::data::synthesize(&spec)
        .map(|inner| PySeries { inner })
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (series, *, learning_rate=None, batch_size=None, epochs=None, window_length=None, hidden_size=None, seed=None, optimizer=None))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    series: &PySeries,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    window_length: Option<usize>,
    hidden_size: Option<usize>,
    seed: Option<u64>,
    optimizer: Option<&str>,
) -> PyResult<PyModel> {
    let cfg = train_config(learning_rate, batch_size, epochs, window_length, hidden_size, seed, optimizer)?;
    let s = series.inner.clone();
    py.detach(move || kc::train(&s, &cfg))
        .map(|out| PyModel { inner: out.model })
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (series, *, detection_threshold=0.6, correction_threshold=0.5, max_iters=50, step=0.1, smoothing_window=12, bandwidth=None, learning_rate=None, batch_size=None, epochs=None, window_length=None, hidden_size=None, seed=None, optimizer=None))]
#[allow(clippy::too_many_arguments)]
fn kclstm_fit(
    py: Python<'_>,
    series: &PySeries,
    detection_threshold: f64,
    correction_threshold: f64,
    max_iters: usize,
    step: f64,
    smoothing_window: usize,
    bandwidth: Option<f64>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    window_length: Option<usize>,
    hidden_size: Option<usize>,
    seed: Option<u64>,
    optimizer: Option<&str>,
) -> PyResult<PyFit> {
    let train_cfg =
        train_config(learning_rate, batch_size, epochs, window_length, hidden_size, seed, optimizer)?;
    let corr = CorrectionConfig {
        detection_threshold,
        correction_threshold,
        max_iters,
        step_init: step,
        smoothing: SmoothingConfig {
            window: smoothing_window,
            bandwidth: self::bandwidth(bandwidth),
        },
    };
    let s = series.inner.clone();
    py.detach(move || kc::kclstm_fit(&s, &train_cfg, &corr))
        .map(|inner| PyFit { inner })
        .map_err(to_py)
}

/// Mean absolute scaled error of `forecast` against `test`, scaled by the
/// one-step naive error over `full_series`.
#[pyfunction]
fn mase(forecast: Vec<f64>, test: Vec<f64>, full_series: Vec<f64>, s: usize) -> PyResult<f64> {
    kc::evaluation::mase(&forecast, &test, &full_series, s).map_err(to_py)
}

/// Returns `(statistic, p_value, verdict)` with verdict one of `"win_a"`,
/// `"win_b"` or `"draw"`.
#[pyfunction]
fn diebold_mariano(errors_a: Vec<f64>, errors_b: Vec<f64>, horizon: usize) -> PyResult<(f64, f64, String)> {
    let r = kc::evaluation::diebold_mariano(&errors_a, &errors_b, horizon).map_err(to_py)?;
    let verdict = match r.verdict {
        kc::Verdict::WinA => "win_a",
        kc::Verdict::WinB => "win_b",
        kc::Verdict::Draw => "draw",
    };
    Ok((r.statistic, r.p_value, verdict.to_string()))
}

#[pyfunction]
fn dtw_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    kc::dynamics::dtw_distance(&a, &b).map_err(to_py)
}

#[pyfunction]
fn gaussian_kernel(a: Vec<f64>, b: Vec<f64>, sigma: f64) -> PyResult<f64> {
    kc::dynamics::gaussian_kernel(&a, &b, sigma).map_err(to_py)
}

/// Kernel-smooths a list of hidden states. `sigma=None` uses the per-position
/// median heuristic.
#[pyfunction]
#[pyo3(signature = (states, window=12, sigma=None))]
fn smooth_trace(states: Vec<Vec<f64>>, window: usize, sigma: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    let matrix = Matrix::from_rows(&states).map_err(to_py)?;
    let trace = HiddenTrace::new(0, matrix).map_err(to_py)?;
    let cfg = SmoothingConfig {
        window,
        bandwidth: bandwidth(sigma),
    };
    let smoothed = kc::dynamics::smooth_trace(&trace, &cfg).map_err(to_py)?;
    Ok(rows(smoothed.smoothed().expect("smooth_trace fills the estimates")))
}

#[pymodule]
fn kclstm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySeries>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyFit>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(kclstm_fit, m)?)?;
    m.add_function(wrap_pyfunction!(mase, m)?)?;
    m.add_function(wrap_pyfunction!(diebold_mariano, m)?)?;
    m.add_function(wrap_pyfunction!(dtw_distance, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_trace, m)?)?;
    Ok(())
}
