//! JSON and CSV persistence for reports and corrected series.
//!
//! JSON holds the complete report. CSV holds one row per series (evaluation)
//! or per flagged point (correction) under a fixed header; loading a CSV
//! rebuilds the report from those rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::series::TimeSeries;
use crate::corrector::{CorrectedPoint, CorrectionReport, RestoredPoint};
use crate::error::{KcError, Result};
use crate::evaluation::{EvalReport, SeriesResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = KcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(KcError::Argument(format!("unknown report format {other:?}"))),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
        }
    }
}

/// A report with a row-oriented CSV view.
pub trait PersistReport: Serialize + DeserializeOwned {
    type Row: Serialize + DeserializeOwned;
    const CSV_COLUMNS: &'static [&'static str];

    fn csv_rows(&self) -> Vec<Self::Row>;
    fn from_csv_rows(rows: Vec<Self::Row>) -> Self;
}

impl PersistReport for EvalReport {
    type Row = SeriesResult;
    const CSV_COLUMNS: &'static [&'static str] = &[
        "series_id",
        "length",
        "split_index",
        "learning_rate",
        "batch_size",
        "mase_lstm",
        "mase_kclstm",
        "dm_statistic",
        "dm_p_value",
        "verdict",
        "lstm_seconds",
        "kclstm_seconds",
        "flagged",
        "changed",
        "restored",
    ];

    fn csv_rows(&self) -> Vec<SeriesResult> {
        self.rows.clone()
    }

    fn from_csv_rows(rows: Vec<SeriesResult>) -> Self {
        EvalReport::from_rows(rows, Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Corrected,
    Restored,
}

/// CSV row of a [`CorrectionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRow {
    pub index: usize,
    pub status: PointStatus,
    pub old_value: f64,
    pub new_value: f64,
    pub old_scaled: Option<f64>,
    pub new_scaled: Option<f64>,
    pub iterations: usize,
    pub divergence: f64,
}

impl PersistReport for CorrectionReport {
    type Row = CorrectionRow;
    const CSV_COLUMNS: &'static [&'static str] = &[
        "index",
        "status",
        "old_value",
        "new_value",
        "old_scaled",
        "new_scaled",
        "iterations",
        "divergence",
    ];

    fn csv_rows(&self) -> Vec<CorrectionRow> {
        let mut rows: Vec<CorrectionRow> = self
            .corrected
            .iter()
            .map(|c| CorrectionRow {
                index: c.index,
                status: PointStatus::Corrected,
                old_value: c.old_value,
                new_value: c.new_value,
                old_scaled: Some(c.old_scaled),
                new_scaled: Some(c.new_scaled),
                iterations: c.iterations,
                divergence: c.final_divergence,
            })
            .chain(self.restored.iter().map(|r| CorrectionRow {
                index: r.index,
                status: PointStatus::Restored,
                old_value: r.value,
                new_value: r.value,
                old_scaled: None,
                new_scaled: None,
                iterations: r.iterations,
                divergence: r.best_divergence,
            }))
            .collect();
        rows.sort_by_key(|r| r.index);
        rows
    }

    fn from_csv_rows(rows: Vec<CorrectionRow>) -> Self {
        let mut report = CorrectionReport {
            flagged: rows.iter().map(|r| r.index).collect(),
            ..CorrectionReport::default()
        };
        for r in rows {
            match r.status {
                PointStatus::Corrected => report.corrected.push(CorrectedPoint {
                    index: r.index,
                    old_value: r.old_value,
                    new_value: r.new_value,
                    old_scaled: r.old_scaled.unwrap_or(f64::NAN),
                    new_scaled: r.new_scaled.unwrap_or(f64::NAN),
                    iterations: r.iterations,
                    final_divergence: r.divergence,
                }),
                PointStatus::Restored => report.restored.push(RestoredPoint {
                    index: r.index,
                    value: r.old_value,
                    iterations: r.iterations,
                    best_divergence: r.divergence,
                }),
            }
        }
        report
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> KcError + '_ {
    move |source| KcError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> KcError + '_ {
    move |source| KcError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `report` to `path`. Field and column order are fixed, and numbers
/// use the shortest representation that parses back to the same `f64`.
pub fn persist_report<R: PersistReport>(report: &R, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let file = File::create(path).map_err(io_err(path))?;
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, report).map_err(|source| KcError::Json {
                path: path.to_path_buf(),
                source,
            })?;
            w.write_all(b"\n").map_err(io_err(path))?;
            w.flush().map_err(io_err(path))
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_path(path)
                .map_err(csv_err(path))?;
            w.write_record(R::CSV_COLUMNS).map_err(csv_err(path))?;
            for row in report.csv_rows() {
                w.serialize(row).map_err(csv_err(path))?;
            }
            w.flush().map_err(io_err(path))
        }
    }
}

pub fn load_report<R: PersistReport>(path: &Path, format: ReportFormat) -> Result<R> {
    match format {
        ReportFormat::Json => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            serde_json::from_str(&text).map_err(|source| KcError::Json {
                path: path.to_path_buf(),
                source,
            })
        }
        ReportFormat::Csv => {
            let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
            let rows = r
                .deserialize()
                .collect::<std::result::Result<Vec<R::Row>, _>>()
                .map_err(csv_err(path))?;
            Ok(R::from_csv_rows(rows))
        }
    }
}

/// Writes `position,original,corrected,flagged,restored` for every position of
/// the series.
pub fn write_series_csv(
    original: &TimeSeries,
    corrected: &TimeSeries,
    report: &CorrectionReport,
    path: &Path,
) -> Result<()> {
    crate::error::check_len("corrected series", original.len(), corrected.len())?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["position", "original", "corrected", "flagged", "restored"])
        .map_err(csv_err(path))?;
    for (i, (o, c)) in original.values().iter().zip(corrected.values()).enumerate() {
        let flagged = report.flagged.binary_search(&i).is_ok();
        let restored = report.restored.iter().any(|r| r.index == i);
        w.serialize((i, o, c, flagged, restored)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::PhaseTimings;
    use crate::evaluation::Verdict;

    fn sample_correction() -> CorrectionReport {
        CorrectionReport {
            detection_threshold: 0.6,
            correction_threshold: 0.5,
            max_divergence: 1.25,
            flagged: vec![14, 30],
            corrected: vec![CorrectedPoint {
                index: 14,
                old_value: std::f64::consts::E,
                new_value: 0.1 + 0.2,
                old_scaled: 0.9,
                new_scaled: 1.0 / 3.0,
                iterations: 7,
                final_divergence: 0.4999999999999999,
            }],
            restored: vec![RestoredPoint {
                index: 30,
                value: -1e-300,
                iterations: 50,
                best_divergence: 0.75,
            }],
            timings: PhaseTimings {
                train_seconds: 1.5,
                correction_seconds: 0.25,
                retrain_seconds: 1.0,
            },
        }
    }

    #[test]
    fn correction_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        let r = sample_correction();
        persist_report(&r, &p, ReportFormat::Json).unwrap();
        assert_eq!(load_report::<CorrectionReport>(&p, ReportFormat::Json).unwrap(), r);
    }

    #[test]
    fn correction_csv_rows_are_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let r = sample_correction();
        persist_report(&r, &p, ReportFormat::Csv).unwrap();
        let back: CorrectionReport = load_report(&p, ReportFormat::Csv).unwrap();
        assert_eq!(back.flagged, r.flagged);
        assert_eq!(back.corrected, r.corrected);
        assert_eq!(back.restored, r.restored);
    }

    #[test]
    fn empty_reports_have_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        persist_report(&CorrectionReport::default(), &p, ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.trim_end(), CorrectionReport::CSV_COLUMNS.join(","));

        let q = dir.path().join("e2.csv");
        let empty = EvalReport::from_rows(vec![], vec![]);
        persist_report(&empty, &q, ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&q).unwrap();
        assert_eq!(text.trim_end(), EvalReport::CSV_COLUMNS.join(","));
        let back: EvalReport = load_report(&q, ReportFormat::Csv).unwrap();
        assert_eq!(back, empty);
    }

    #[test]
    fn eval_csv_header_matches_serde_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        let mut w = csv::Writer::from_path(&p).unwrap();
        w.serialize(SeriesResult {
            series_id: "x".into(),
            length: 1,
            split_index: 1,
            learning_rate: 0.1,
            batch_size: 1,
            mase_lstm: 1.0,
            mase_kclstm: 1.0,
            dm_statistic: 0.0,
            dm_p_value: 1.0,
            verdict: Verdict::Draw,
            lstm_seconds: 0.1,
            kclstm_seconds: 0.2,
            flagged: 0,
            changed: 0,
            restored: 0,
        })
        .unwrap();
        drop(w);
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), EvalReport::CSV_COLUMNS.join(","));
    }

    #[test]
    fn write_failure_names_path() {
        let err = persist_report(
            &CorrectionReport::default(),
            Path::new("/nonexistent-dir/r.json"),
            ReportFormat::Json,
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/r.json"));
    }
}
