use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kclstm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kclstm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(out: Output) -> Output {
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

const FAST: [&str; 6] = ["--hidden-size", "8", "--epochs", "15", "--window-length", "6"];

/// Writes a synthetic series file and returns the work directory.
fn fixture(outliers: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    ok(kclstm(
        &["synth", "--out-dir", "data", "--n", "120", "--outliers", outliers, "--seed", "4"],
        dir.path(),
    ));
    dir
}

fn with_fast<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(FAST).collect()
}

#[test]
fn help_and_version_exit_zero() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&kclstm(&["--help"], dir.path())), 0);
    assert_eq!(code(&kclstm(&["--version"], dir.path())), 0);
    assert_eq!(code(&kclstm(&["benchmark", "--help"], dir.path())), 0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = fixture("0");
    assert_eq!(code(&kclstm(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&kclstm(&["train", "--out-dir", "x"], dir.path())), 1);
    let lax = kclstm(
        &[
            "correct", "--input", "data/series.json", "--out-dir", "x",
            "--detection-threshold", "0.4", "--correction-threshold", "0.5",
        ],
        dir.path(),
    );
    assert_eq!(code(&lax), 1);
    let odd = kclstm(
        &["correct", "--input", "data/series.json", "--out-dir", "x", "--smoothing-window", "5"],
        dir.path(),
    );
    assert_eq!(code(&odd), 1);
    assert!(!dir.path().join("x").exists());
}

#[test]
fn train_writes_model_and_summary() {
    let dir = fixture("0");
    ok(kclstm(&with_fast(&["train", "--input", "data/series.json", "--out-dir", "a"]), dir.path()));
    let summary = json(dir.path().join("a/summary.json"));
    assert!(summary["final_loss"].as_f64().unwrap().is_finite());
    assert!(summary["train_seconds"].as_f64().unwrap() >= 0.0);
    assert!(dir.path().join("a/model.json").is_file());
    let manifest = json(dir.path().join("a/manifest.json"));
    assert_eq!(manifest["config"]["command"], "train");
    assert_eq!(manifest["config"]["train"]["hidden_size"], 8);
    assert!(manifest["hardware"]["logical_cpus"].as_u64().unwrap() >= 1);
}

#[test]
fn same_seed_gives_identical_model_files() {
    let dir = fixture("0");
    for out in ["a", "b"] {
        ok(kclstm(&with_fast(&["train", "--input", "data/series.json", "--out-dir", out]), dir.path()));
    }
    assert_eq!(
        fs::read(dir.path().join("a/model.json")).unwrap(),
        fs::read(dir.path().join("b/model.json")).unwrap()
    );
}

#[test]
fn constant_series_trains_to_near_zero_loss() {
    let dir = TempDir::new().unwrap();
    let series = serde_json::json!({
        "id": "flat",
        "values": vec![3.5; 60],
        "split_index": 48,
        "provenance": {"kind": "m4_csv"}
    });
    fs::write(dir.path().join("flat.json"), series.to_string()).unwrap();
    ok(kclstm(
        &["train", "--input", "flat.json", "--out-dir", "a", "--hidden-size", "8", "--window-length", "6"],
        dir.path(),
    ));
    let loss = json(dir.path().join("a/summary.json"))["final_loss"].as_f64().unwrap();
    assert!(loss <= 1e-4, "final loss {loss}");
}

fn csv_column(path: &Path, column: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == column).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

#[test]
fn huge_detection_threshold_leaves_series_unchanged() {
    let dir = fixture("5");
    ok(kclstm(
        &with_fast(&[
            "correct", "--input", "data/series.json", "--out-dir", "c",
            "--detection-threshold", "1e9",
        ]),
        dir.path(),
    ));
    let original = csv_column(&dir.path().join("c/corrected.csv"), "original");
    let corrected = csv_column(&dir.path().join("c/corrected.csv"), "corrected");
    assert_eq!(original, corrected);
    let series = json(dir.path().join("data/series.json"));
    let values: Vec<f64> = series[0]["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let written: Vec<f64> = corrected.iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(values, written);
    let report = json(dir.path().join("c/correction_report.json"));
    assert!(report["flagged"].as_array().unwrap().is_empty());
}

#[test]
fn spiked_series_gets_corrections() {
    let dir = fixture("5");
    // With the default W = 12 every flagged point of this fixture is restored;
    // the narrowest window isolates the spikes.
    ok(kclstm(
        &[
            "correct", "--input", "data/series.json", "--out-dir", "c", "--format", "csv",
            "--smoothing-window", "2",
        ],
        dir.path(),
    ));
    for f in ["corrected.csv", "correction_report.csv", "model.json", "trace.csv", "timings.json"] {
        assert!(dir.path().join("c").join(f).is_file(), "missing {f}");
    }
    let status = csv_column(&dir.path().join("c/correction_report.csv"), "status");
    assert!(status.iter().any(|s| s == "corrected"), "no corrected index in {status:?}");
    let old = csv_column(&dir.path().join("c/correction_report.csv"), "old_value");
    let new = csv_column(&dir.path().join("c/correction_report.csv"), "new_value");
    assert!(old.iter().zip(&new).any(|(a, b)| a != b));
    let timings = json(dir.path().join("c/timings.json"));
    assert!(timings["total_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn missing_input_fails_without_outputs() {
    let dir = TempDir::new().unwrap();
    for cmd in ["train", "correct", "benchmark"] {
        let out = kclstm(&[cmd, "--input", "nope.json", "--out-dir", "out"], dir.path());
        assert_eq!(code(&out), 2, "{cmd}");
        assert!(!dir.path().join("out").exists(), "{cmd} left outputs");
    }
}

#[test]
fn divergence_exits_three() {
    let dir = fixture("0");
    let out = kclstm(
        &with_fast(&[
            "train", "--input", "data/series.json", "--out-dir", "d",
            "--optimizer", "sgd", "--learning-rate", "1e200",
        ]),
        dir.path(),
    );
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn benchmark_on_one_series() {
    let dir = fixture("3");
    ok(kclstm(&with_fast(&["benchmark", "--input", "data/series.json", "--out-dir", "b"]), dir.path()));
    let report = json(dir.path().join("b/eval_report.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    let tally = |k: &str| report[k].as_u64().unwrap();
    assert_eq!(tally("kclstm_wins") + tally("lstm_wins") + tally("draws"), 1);

    let plot = fs::read_to_string(dir.path().join("b/plot_mase.csv")).unwrap();
    assert_eq!(plot.lines().count(), 2);
    let tallies = fs::read_to_string(dir.path().join("b/tallies.csv")).unwrap();
    assert!(tallies.contains("evaluated,1"));
    let table = fs::read_to_string(dir.path().join("b/timing_table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "algorithm,mean,median,std_dev,average_time_s");
    let seconds = lines[1].rsplit(',').next().unwrap();
    assert_eq!(seconds.split('.').nth(1).map(str::len), Some(2), "{seconds}");
}

#[test]
fn benchmark_tallies_cover_every_series() {
    let dir = TempDir::new().unwrap();
    ok(kclstm(&["synth", "--out-dir", "data", "--n", "100", "--count", "3", "--seed", "2"], dir.path()));
    ok(kclstm(
        &with_fast(&["benchmark", "--input", "data/series.json", "--out-dir", "b", "--format", "csv"]),
        dir.path(),
    ));
    let tallies = fs::read_to_string(dir.path().join("b/tallies.csv")).unwrap();
    let get = |k: &str| -> u64 {
        tallies
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{k},")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(get("evaluated"), 3);
    assert_eq!(get("kclstm_wins") + get("lstm_wins") + get("draws"), get("evaluated"));
    assert_eq!(csv_column(&dir.path().join("b/eval_report.csv"), "series_id").len(), 3);
}

#[test]
fn rerun_reproduces_outputs() {
    let dir = fixture("5");
    ok(kclstm(
        &with_fast(&["correct", "--input", "data/series.json", "--out-dir", "c", "--detection-threshold", "0.3", "--correction-threshold", "0.3"]),
        dir.path(),
    ));
    ok(kclstm(&["rerun", "--manifest", "c/manifest.json", "--out-dir", "r"], dir.path()));
    for f in ["corrected.csv", "correction_report.json", "model.json", "trace.csv"] {
        assert_eq!(
            fs::read(dir.path().join("c").join(f)).unwrap(),
            fs::read(dir.path().join("r").join(f)).unwrap(),
            "{f} differs"
        );
    }
    let a = json(dir.path().join("c/manifest.json"));
    let b = json(dir.path().join("r/manifest.json"));
    assert_eq!(a["config"]["correction"], b["config"]["correction"]);
    assert_eq!(b["config"]["out_dir"], "r");
}

#[test]
fn synth_corpus_mixes_kinds() {
    let dir = TempDir::new().unwrap();
    ok(kclstm(&["synth", "--out-dir", "data", "--count", "4"], dir.path()));
    let series = json(dir.path().join("data/series.json"));
    let arr = series.as_array().unwrap();
    assert_eq!(arr.len(), 4);
    let spikes: Vec<usize> = arr
        .iter()
        .map(|s| s["provenance"]["outlier_indices"].as_array().unwrap().len())
        .collect();
    assert_eq!(spikes, vec![2, 3, 4, 5]);
}

#[test]
fn reads_m4_csv_and_selects_series() {
    let dir = TempDir::new().unwrap();
    let row = |id: &str, phase: f64| {
        let values: Vec<String> = (0..60)
            .map(|t| format!("{:.4}", 100.0 + 10.0 * (t as f64 * 0.5 + phase).sin()))
            .collect();
        format!("\"{id}\",{},,\n", values.join(","))
    };
    let mut text = String::from("V1,V2,V3\n");
    text.push_str(&row("M1", 0.0));
    text.push_str(&row("M2", 1.0));
    text.push_str("M3,1.0,2.0\n");
    fs::write(dir.path().join("train.csv"), text).unwrap();
    ok(kclstm(
        &with_fast(&["train", "--input", "train.csv", "--series", "M2", "--out-dir", "a"]),
        dir.path(),
    ));
    assert_eq!(json(dir.path().join("a/summary.json"))["series_id"], "M2");
    let missing = kclstm(
        &with_fast(&["train", "--input", "train.csv", "--series", "M9", "--out-dir", "b"]),
        dir.path(),
    );
    assert_eq!(code(&missing), 1);
}
