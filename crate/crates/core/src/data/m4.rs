use std::path::Path;

use super::series::{TimeSeries, M4_MONTHLY_HORIZON};
use crate::error::{KcError, Result};

/// Reads the first `limit` usable series of an M4-layout CSV: a header row,
/// then one row per series holding its id followed by its values. Trailing
/// empty cells are ignored.
///
/// Each series is split with the Monthly horizon held out. Series shorter than
/// `window_length + 18 + 2` are skipped with a warning and do not count
/// towards `limit`.
pub fn load_m4_csv(path: &Path, limit: usize, window_length: usize) -> Result<Vec<TimeSeries>> {
    let mut out = Vec::new();
    if limit == 0 {
        return Ok(out);
    }
    let csv_err = |source| KcError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let min_len = window_length + M4_MONTHLY_HORIZON + 2;

    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // Row numbers are 1-based and count the header.
        let row = r + 2;
        let Some(id) = record.get(0) else { continue };
        if id.is_empty() {
            continue;
        }
        let mut values = Vec::with_capacity(record.len());
        let mut ended = false;
        for (c, cell) in record.iter().enumerate().skip(1) {
            if cell.is_empty() {
                ended = true;
                continue;
            }
            let parse_err = |message: String| KcError::Parse {
                path: path.to_path_buf(),
                row,
                column: c + 1,
                message,
            };
            if ended {
                return Err(parse_err("value after an empty cell".into()));
            }
            let v: f64 = cell
                .parse()
                .map_err(|e| parse_err(format!("{cell:?}: {e}")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("{cell:?} is not finite")));
            }
            values.push(v);
        }
        if values.len() < min_len {
            log::warn!(
                "{}: skipping series {id} with {} values (need {min_len})",
                path.display(),
                values.len()
            );
            continue;
        }
        let split = values.len() - M4_MONTHLY_HORIZON;
        out.push(TimeSeries::new(id, values, split)?);
        if out.len() == limit {
            break;
        }
    }
    Ok(out)
}
