use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kclstm_core::corrector::CorrectionConfig;
use kclstm_core::data::{ReportFormat, SeriesKind, SynthSpec};
use kclstm_core::dynamics::{Bandwidth, SmoothingConfig};
use kclstm_core::evaluation::{BenchmarkConfig, Grid, MaseDenominator, MaseOptions};
use kclstm_core::lstm::{OptimizerKind, TrainConfig};

use crate::config::{
    BenchmarkRun, CorrectRun, InputSpec, RunConfig, SynthRun, TrainRun, DEFAULT_M4_LIMIT,
};

fn train_defaults() -> TrainConfig {
    TrainConfig::default()
}

fn correction_defaults() -> CorrectionConfig {
    CorrectionConfig::default()
}

fn synth_defaults() -> SynthSpec {
    SynthSpec::default()
}

#[derive(Debug, Parser)]
#[command(name = "kclstm", version, about = "Train, correct and benchmark LSTM forecasters")]
pub struct Cli {
    /// Log filter, e.g. `warn` or `kclstm_core=debug`.
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic series with injected spikes.
    Synth(SynthArgs),
    /// Train the baseline LSTM on one series.
    Train(TrainCmd),
    /// Train, correct the training split, and retrain.
    Correct(CorrectCmd),
    /// Compare the baseline and the corrector on a corpus.
    Benchmark(BenchmarkCmd),
    /// Repeat a previous run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Series file: `.json` (one series or a list) or an M4-style CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Series id to use; defaults to the first series in the file.
    #[arg(long)]
    pub series: Option<String>,
    /// Maximum number of series read from an M4 CSV.
    #[arg(long, default_value_t = DEFAULT_M4_LIMIT)]
    pub limit: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = train_defaults().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = train_defaults().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = train_defaults().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = train_defaults().window_length)]
    pub window_length: usize,
    #[arg(long, default_value_t = train_defaults().hidden_size)]
    pub hidden_size: usize,
    #[arg(long, default_value_t = train_defaults().seed)]
    pub seed: u64,
    /// `adam` or `sgd`.
    #[arg(long, default_value = "adam")]
    pub optimizer: OptimizerKind,
    /// Epochs without sufficient improvement before stopping; 0 disables.
    #[arg(long, default_value_t = train_defaults().early_stop_patience)]
    pub patience: usize,
    #[arg(long, default_value_t = train_defaults().early_stop_min_delta)]
    pub min_delta: f64,
    /// Lower end of the scaling interval.
    #[arg(long, default_value_t = train_defaults().scale_range[0], allow_negative_numbers = true)]
    pub scale_min: f64,
    /// Upper end of the scaling interval.
    #[arg(long, default_value_t = train_defaults().scale_range[1], allow_negative_numbers = true)]
    pub scale_max: f64,
}

impl From<&TrainArgs> for TrainConfig {
    fn from(a: &TrainArgs) -> Self {
        TrainConfig {
            learning_rate: a.learning_rate,
            batch_size: a.batch_size,
            epochs: a.epochs,
            window_length: a.window_length,
            hidden_size: a.hidden_size,
            seed: a.seed,
            optimizer: a.optimizer,
            early_stop_patience: a.patience,
            early_stop_min_delta: a.min_delta,
            scale_range: [a.scale_min, a.scale_max],
        }
    }
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    if s.eq_ignore_ascii_case("median") {
        return Ok(Bandwidth::MedianHeuristic);
    }
    s.parse::<f64>()
        .map(Bandwidth::Fixed)
        .map_err(|_| format!("expected `median` or a number, got {s:?}"))
}

#[derive(Debug, Args)]
pub struct CorrectionArgs {
    /// Divergence above which a point is flagged.
    #[arg(long, default_value_t = correction_defaults().detection_threshold)]
    pub detection_threshold: f64,
    /// Divergence at or below which a correction is accepted.
    #[arg(long, default_value_t = correction_defaults().correction_threshold)]
    pub correction_threshold: f64,
    #[arg(long, default_value_t = correction_defaults().max_iters)]
    pub max_iters: usize,
    /// Initial search step in scaled units.
    #[arg(long, default_value_t = correction_defaults().step_init)]
    pub step: f64,
    /// Even kernel smoothing window.
    #[arg(long, default_value_t = correction_defaults().smoothing.window)]
    pub smoothing_window: usize,
    /// `median` for the per-position median heuristic, or a fixed bandwidth.
    #[arg(long, default_value = "median", value_parser = parse_bandwidth)]
    pub bandwidth: Bandwidth,
}

impl From<&CorrectionArgs> for CorrectionConfig {
    fn from(a: &CorrectionArgs) -> Self {
        CorrectionConfig {
            detection_threshold: a.detection_threshold,
            correction_threshold: a.correction_threshold,
            max_iters: a.max_iters,
            step_init: a.step,
            smoothing: SmoothingConfig {
                window: a.smoothing_window,
                bandwidth: a.bandwidth,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// `sine`, `trend_sine` or `random_walk`; ignored when `--count` > 1.
    #[arg(long, default_value = "sine")]
    pub kind: SeriesKind,
    /// Number of series. More than one builds a mixed corpus with 2 to 5
    /// spikes each.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = synth_defaults().id)]
    pub id: String,
    #[arg(long, default_value_t = synth_defaults().n)]
    pub n: usize,
    #[arg(long, default_value_t = synth_defaults().noise_sd)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = synth_defaults().n_outliers)]
    pub outliers: usize,
    /// Spike size in noise standard deviations.
    #[arg(long, default_value_t = synth_defaults().outlier_magnitude)]
    pub magnitude: f64,
    #[arg(long, default_value_t = synth_defaults().period)]
    pub period: usize,
    #[arg(long, default_value_t = synth_defaults().horizon)]
    pub horizon: usize,
    #[arg(long, default_value_t = synth_defaults().seed)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct CorrectCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub correction: CorrectionArgs,
    /// Format of the correction report.
    #[arg(long, default_value = "json")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct BenchmarkCmd {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub correction: CorrectionArgs,
    /// Tune learning rate and batch size per series on a validation tail.
    #[arg(long)]
    pub grid: bool,
    /// Learning rates tried by `--grid` (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = Grid::default().learning_rates)]
    pub grid_learning_rates: Vec<f64>,
    /// Batch sizes tried by `--grid` (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = Grid::default().batch_sizes)]
    pub grid_batch_sizes: Vec<usize>,
    #[arg(long, default_value_t = BenchmarkConfig::default().validation_fraction)]
    pub validation_fraction: f64,
    #[arg(long, default_value_t = BenchmarkConfig::default().dm_horizon)]
    pub dm_horizon: usize,
    /// Scale MASE by the naive error of the training split only.
    #[arg(long)]
    pub mase_train_only: bool,
    /// Use the signed mean error in the MASE numerator.
    #[arg(long)]
    pub mase_signed: bool,
    /// Series evaluated concurrently.
    #[arg(long, default_value_t = BenchmarkConfig::default().workers)]
    pub workers: usize,
    /// Format of the evaluation report.
    #[arg(long, default_value = "json")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write into this directory instead of the one recorded in the manifest.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl InputArgs {
    fn spec(&self) -> InputSpec {
        InputSpec {
            path: self.input.clone(),
            series: self.series.clone(),
            limit: self.limit,
        }
    }
}

/// Resolves parsed flags into a run configuration. `Rerun` has none of its
/// own and yields `None`.
pub fn resolve(command: &Command) -> Option<RunConfig> {
    Some(match command {
        Command::Synth(a) => RunConfig::Synth(SynthRun {
            out_dir: a.out_dir.clone(),
            count: a.count,
            spec: SynthSpec {
                id: a.id.clone(),
                kind: a.kind,
                n: a.n,
                noise_sd: a.noise_sd,
                n_outliers: a.outliers,
                outlier_magnitude: a.magnitude,
                seed: a.seed,
                period: a.period,
                horizon: a.horizon,
                ..synth_defaults()
            },
        }),
        Command::Train(a) => RunConfig::Train(TrainRun {
            input: a.input.spec(),
            out_dir: a.out_dir.clone(),
            train: (&a.train).into(),
        }),
        Command::Correct(a) => RunConfig::Correct(CorrectRun {
            input: a.input.spec(),
            out_dir: a.out_dir.clone(),
            train: (&a.train).into(),
            correction: (&a.correction).into(),
            format: a.format,
        }),
        Command::Benchmark(a) => RunConfig::Benchmark(BenchmarkRun {
            input: a.input.spec(),
            out_dir: a.out_dir.clone(),
            format: a.format,
            benchmark: BenchmarkConfig {
                train: (&a.train).into(),
                correction: (&a.correction).into(),
                grid: a.grid.then(|| Grid {
                    learning_rates: a.grid_learning_rates.clone(),
                    batch_sizes: a.grid_batch_sizes.clone(),
                }),
                validation_fraction: a.validation_fraction,
                dm_horizon: a.dm_horizon,
                mase: MaseOptions {
                    denominator: if a.mase_train_only {
                        MaseDenominator::TrainOnly
                    } else {
                        MaseDenominator::FullSeries
                    },
                    signed_numerator: a.mase_signed,
                },
                workers: a.workers,
            },
        }),
        Command::Rerun(_) => return None,
    })
}
