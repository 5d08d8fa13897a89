use std::path::{Path, PathBuf};

use kclstm_core::corrector::CorrectionConfig;
use kclstm_core::data::{load_m4_csv, ReportFormat, SynthSpec, TimeSeries};
use kclstm_core::evaluation::BenchmarkConfig;
use kclstm_core::lstm::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};

pub const DEFAULT_M4_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    pub series: Option<String>,
    pub limit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRun {
    pub out_dir: PathBuf,
    pub count: usize,
    pub spec: SynthSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub input: InputSpec,
    pub out_dir: PathBuf,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectRun {
    pub input: InputSpec,
    pub out_dir: PathBuf,
    pub train: TrainConfig,
    pub correction: CorrectionConfig,
    pub format: ReportFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub input: InputSpec,
    pub out_dir: PathBuf,
    pub benchmark: BenchmarkConfig,
    pub format: ReportFormat,
}

/// Fully resolved configuration of one command. This is what the manifest
/// records and what `rerun` replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Synth(SynthRun),
    Train(TrainRun),
    Correct(CorrectRun),
    Benchmark(BenchmarkRun),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Synth(_) => "synth",
            Self::Train(_) => "train",
            Self::Correct(_) => "correct",
            Self::Benchmark(_) => "benchmark",
        }
    }

    pub fn out_dir(&self) -> &Path {
        match self {
            Self::Synth(r) => &r.out_dir,
            Self::Train(r) => &r.out_dir,
            Self::Correct(r) => &r.out_dir,
            Self::Benchmark(r) => &r.out_dir,
        }
    }

    pub fn set_out_dir(&mut self, dir: PathBuf) {
        match self {
            Self::Synth(r) => r.out_dir = dir,
            Self::Train(r) => r.out_dir = dir,
            Self::Correct(r) => r.out_dir = dir,
            Self::Benchmark(r) => r.out_dir = dir,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::Synth(r) => r.spec.seed,
            Self::Train(r) => r.train.seed,
            Self::Correct(r) => r.train.seed,
            Self::Benchmark(r) => r.benchmark.train.seed,
        }
    }

    /// Checks every numeric setting against the module preconditions.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Synth(r) => {
                if r.count == 0 {
                    return Err(CliError::Usage("--count must be at least 1".into()));
                }
                if !(r.spec.outlier_magnitude.is_finite() && r.spec.outlier_magnitude >= 0.0) {
                    return Err(CliError::Usage("--magnitude must be non-negative".into()));
                }
                Ok(())
            }
            Self::Train(r) => {
                check_limit(&r.input)?;
                r.train.validate().map_err(CliError::usage)
            }
            Self::Correct(r) => {
                check_limit(&r.input)?;
                r.train.validate().map_err(CliError::usage)?;
                r.correction.validate().map_err(CliError::usage)
            }
            Self::Benchmark(r) => {
                check_limit(&r.input)?;
                let b = &r.benchmark;
                b.train.validate().map_err(CliError::usage)?;
                b.correction.validate().map_err(CliError::usage)?;
                if b.workers == 0 {
                    return Err(CliError::Usage("--workers must be at least 1".into()));
                }
                if b.dm_horizon == 0 {
                    return Err(CliError::Usage("--dm-horizon must be at least 1".into()));
                }
                if !(b.validation_fraction > 0.0 && b.validation_fraction < 1.0) {
                    return Err(CliError::Usage(
                        "--validation-fraction must lie strictly between 0 and 1".into(),
                    ));
                }
                if let Some(g) = &b.grid {
                    if g.learning_rates.is_empty() || g.batch_sizes.is_empty() {
                        return Err(CliError::Usage("the grid needs at least one cell".into()));
                    }
                    if g.learning_rates.iter().any(|lr| !(lr.is_finite() && *lr > 0.0))
                        || g.batch_sizes.contains(&0)
                    {
                        return Err(CliError::Usage(
                            "grid learning rates and batch sizes must be positive".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }
}

fn check_limit(input: &InputSpec) -> Result<()> {
    if input.limit == 0 {
        return Err(CliError::Usage("--limit must be at least 1".into()));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SeriesFile {
    One(TimeSeries),
    Many(Vec<TimeSeries>),
}

/// Reads every series from a `.json` file or an M4-style CSV.
pub fn load_series(input: &InputSpec, window_length: usize) -> Result<Vec<TimeSeries>> {
    let path = &input.path;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut all = if is_json {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        match serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.clone(),
            source,
        })? {
            SeriesFile::One(s) => vec![s],
            SeriesFile::Many(v) => v,
        }
    } else {
        load_m4_csv(path, input.limit, window_length)?
    };
    all.truncate(input.limit);
    if let Some(id) = &input.series {
        all.retain(|s| s.id() == id);
        if all.is_empty() {
            return Err(CliError::Usage(format!(
                "series {id:?} not found in {}",
                path.display()
            )));
        }
    }
    if all.is_empty() {
        return Err(CliError::Core(kclstm_core::KcError::State(format!(
            "{} contains no usable series",
            path.display()
        ))));
    }
    Ok(all)
}

/// The selected series, or the first one in the file.
pub fn load_one(input: &InputSpec, window_length: usize) -> Result<TimeSeries> {
    Ok(load_series(input, window_length)?.swap_remove(0))
}
