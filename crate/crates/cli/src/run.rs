use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kclstm_core::corrector::kclstm_fit;
use kclstm_core::data::{
    persist_report, synthesize, synthesize_corpus, write_series_csv, ReportFormat,
};
use kclstm_core::dynamics::write_trace_csv;
use kclstm_core::evaluation::{benchmark, EvalReport};
use kclstm_core::lstm::train;
use serde::{Deserialize, Serialize};

use crate::config::{load_one, load_series, BenchmarkRun, CorrectRun, RunConfig, SynthRun, TrainRun};
use crate::error::{io_err, CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hardware {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub cpu_model: Option<String>,
}

impl Hardware {
    pub fn detect() -> Self {
        let cpu_model = fs::read_to_string("/proc/cpuinfo").ok().and_then(|info| {
            info.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        });
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cpu_model,
        }
    }
}

/// Written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub config: RunConfig,
    pub hardware: Hardware,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Files and timings produced by one command.
#[derive(Debug, Default)]
struct Produced {
    outputs: Vec<String>,
    timings: BTreeMap<String, f64>,
}

struct OutDir {
    dir: PathBuf,
    produced: Produced,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            produced: Produced::default(),
        })
    }

    /// Path of a new output file, recorded for the manifest.
    fn file(&mut self, name: &str) -> PathBuf {
        self.produced.outputs.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.file(name);
        write_json(&path, value)
    }

    fn time(&mut self, phase: &str, seconds: f64) {
        self.produced.timings.insert(phase.to_string(), seconds);
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

/// Validates, runs and records one command. Inputs are read before the output
/// directory is created, so a bad input leaves nothing behind.
pub fn execute(cfg: &RunConfig, argv: Vec<String>) -> Result<Manifest> {
    cfg.validate()?;
    let produced = match cfg {
        RunConfig::Synth(r) => run_synth(r)?,
        RunConfig::Train(r) => run_train(r)?,
        RunConfig::Correct(r) => run_correct(r)?,
        RunConfig::Benchmark(r) => run_benchmark(r)?,
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        argv,
        seed: cfg.seed(),
        config: cfg.clone(),
        hardware: Hardware::detect(),
        timings: produced.timings,
        outputs: produced.outputs,
    };
    write_json(&cfg.out_dir().join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn run_synth(r: &SynthRun) -> Result<Produced> {
    let series = if r.count == 1 {
        vec![synthesize(&r.spec)?]
    } else {
        synthesize_corpus(r.count, r.spec.seed, &r.spec)?
    };
    let mut out = OutDir::create(&r.out_dir)?;
    out.json("series.json", &series)?;
    Ok(out.produced)
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    series_id: &'a str,
    final_loss: f64,
    epochs_run: usize,
    train_seconds: f64,
}

fn run_train(r: &TrainRun) -> Result<Produced> {
    let series = load_one(&r.input, r.train.window_length)?;
    let started = Instant::now();
    let outcome = train(&series, &r.train)?;
    let seconds = started.elapsed().as_secs_f64();

    let mut out = OutDir::create(&r.out_dir)?;
    let model_path = out.file("model.json");
    outcome.model.save(&model_path)?;
    out.json(
        "summary.json",
        &TrainSummary {
            series_id: series.id(),
            final_loss: outcome.model.final_loss,
            epochs_run: outcome.model.epochs_run(),
            train_seconds: round2(seconds),
        },
    )?;
    out.time("train", seconds);
    Ok(out.produced)
}

fn run_correct(r: &CorrectRun) -> Result<Produced> {
    let series = load_one(&r.input, r.train.window_length)?;
    let started = Instant::now();
    let mut fit = kclstm_fit(&series, &r.train, &r.correction)?;
    let total = started.elapsed().as_secs_f64();
    // Timings go to their own file so the report is reproducible byte for byte.
    let timings = std::mem::take(&mut fit.report.timings);

    let mut out = OutDir::create(&r.out_dir)?;
    let corrected_path = out.file("corrected.csv");
    write_series_csv(&series, &fit.corrected, &fit.report, &corrected_path)?;
    let report_path = out.file(&format!("correction_report.{}", r.format.extension()));
    persist_report(&fit.report, &report_path, r.format)?;
    let model_path = out.file("model.json");
    fit.model.save(&model_path)?;
    let trace_path = out.file("trace.csv");
    write_trace_csv(&fit.trace, &trace_path)?;
    out.json(
        "timings.json",
        &BTreeMap::from([
            ("train_seconds", round2(timings.train_seconds)),
            ("correction_seconds", round2(timings.correction_seconds)),
            ("retrain_seconds", round2(timings.retrain_seconds)),
            ("total_seconds", round2(timings.total())),
        ]),
    )?;
    out.time("train", timings.train_seconds);
    out.time("correction", timings.correction_seconds);
    out.time("retrain", timings.retrain_seconds);
    out.time("total", total);
    Ok(out.produced)
}

fn run_benchmark(r: &BenchmarkRun) -> Result<Produced> {
    let corpus = load_series(&r.input, r.benchmark.train.window_length)?;
    let started = Instant::now();
    let report = benchmark(&corpus, &r.benchmark)?;
    let total = started.elapsed().as_secs_f64();
    if report.evaluated() == 0 {
        return Err(CliError::NothingEvaluated(report.failures.len()));
    }

    let mut out = OutDir::create(&r.out_dir)?;
    let report_path = out.file(&format!("eval_report.{}", r.format.extension()));
    persist_report(&report, &report_path, r.format)?;
    if r.format == ReportFormat::Csv && !report.failures.is_empty() {
        out.json("failures.json", &report.failures)?;
    }
    let path = out.file("plot_mase.csv");
    write_text(&path, &plot_csv(&report))?;
    let path = out.file("tallies.csv");
    write_text(&path, &tallies_csv(&report))?;
    let path = out.file("timing_table.csv");
    write_text(&path, &timing_table_csv(&report))?;
    out.time("lstm_mean", report.lstm.mean_seconds);
    out.time("kclstm_mean", report.kclstm.mean_seconds);
    out.time("total", total);
    Ok(out.produced)
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Per-series MASE pairs.
pub fn plot_csv(report: &EvalReport) -> String {
    let mut s = String::from("series_id,mase_lstm,mase_kclstm,verdict\n");
    for r in &report.rows {
        let verdict = serde_json::to_value(r.verdict)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{verdict}\n",
            csv_field(&r.series_id),
            r.mase_lstm,
            r.mase_kclstm
        ));
    }
    s
}

/// Diebold-Mariano outcomes from the corrector's point of view.
pub fn tallies_csv(report: &EvalReport) -> String {
    format!(
        "outcome,count\nkclstm_wins,{}\nlstm_wins,{}\ndraws,{}\nkclstm_lower_mase,{}\nevaluated,{}\nfailed,{}\n",
        report.kclstm_wins,
        report.lstm_wins,
        report.draws,
        report.kclstm_lower_mase,
        report.evaluated(),
        report.failures.len()
    )
}

/// Mean, median and standard deviation of MASE and the average time, one
/// row per algorithm.
pub fn timing_table_csv(report: &EvalReport) -> String {
    let mut s = String::from("algorithm,mean,median,std_dev,average_time_s\n");
    for (name, a) in [("LSTM", &report.lstm), ("KcLSTM", &report.kclstm)] {
        s.push_str(&format!(
            "{name},{},{},{},{:.2}\n",
            a.mean, a.median, a.std_dev, a.mean_seconds
        ));
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
