use serde::{Deserialize, Serialize};

use crate::error::{argument, KcError, Result};

/// Forecast horizon of the M4 Monthly subset; also the default holdout length.
pub const M4_MONTHLY_HORIZON: usize = 18;

/// Where a series came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    M4Csv,
    /// Generated series with the ground truth needed to score corrections.
    Synthetic {
        clean_values: Vec<f64>,
        outlier_indices: Vec<usize>,
    },
}

/// A univariate series with a holdout split: `values[..split_index]` is the
/// training part, the rest is the test part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries", into = "RawSeries")]
pub struct TimeSeries {
    id: String,
    values: Vec<f64>,
    split_index: usize,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct RawSeries {
    id: String,
    values: Vec<f64>,
    split_index: usize,
    provenance: Provenance,
}

impl TryFrom<RawSeries> for TimeSeries {
    type Error = KcError;

    fn try_from(raw: RawSeries) -> Result<Self> {
        TimeSeries::with_provenance(raw.id, raw.values, raw.split_index, raw.provenance)
    }
}

impl From<TimeSeries> for RawSeries {
    fn from(s: TimeSeries) -> Self {
        Self {
            id: s.id,
            values: s.values,
            split_index: s.split_index,
            provenance: s.provenance,
        }
    }
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, values: Vec<f64>, split_index: usize) -> Result<Self> {
        Self::with_provenance(id, values, split_index, Provenance::M4Csv)
    }

    pub fn with_provenance(
        id: impl Into<String>,
        values: Vec<f64>,
        split_index: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        let id = id.into();
        let n = values.len();
        if split_index == 0 || split_index >= n {
            return Err(argument(format!(
                "series {id}: split index {split_index} must lie in 1..{n}"
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(argument(format!("series {id}: value at {pos} is not finite")));
        }
        if let Provenance::Synthetic {
            clean_values,
            outlier_indices,
        } = &provenance
        {
            if clean_values.len() != n {
                return Err(argument(format!(
                    "series {id}: {} clean values for {n} observations",
                    clean_values.len()
                )));
            }
            if outlier_indices.iter().any(|&i| i >= split_index) {
                return Err(argument(format!(
                    "series {id}: outliers must lie in the training split"
                )));
            }
        }
        Ok(Self {
            id,
            values,
            split_index,
            provenance,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn split_index(&self) -> usize {
        self.split_index
    }

    pub fn train(&self) -> &[f64] {
        &self.values[..self.split_index]
    }

    pub fn test(&self) -> &[f64] {
        &self.values[self.split_index..]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn clean_values(&self) -> Option<&[f64]> {
        match &self.provenance {
            Provenance::Synthetic { clean_values, .. } => Some(clean_values),
            Provenance::M4Csv => None,
        }
    }

    pub fn outlier_indices(&self) -> Option<&[usize]> {
        match &self.provenance {
            Provenance::Synthetic {
                outlier_indices, ..
            } => Some(outlier_indices),
            Provenance::M4Csv => None,
        }
    }

    /// Same series with a replaced training split; the test split is kept
    /// verbatim.
    pub fn with_train_values(&self, train: Vec<f64>) -> Result<Self> {
        crate::error::check_len("replacement training split", self.split_index, train.len())?;
        let mut values = train;
        values.extend_from_slice(self.test());
        Self::with_provenance(
            self.id.clone(),
            values,
            self.split_index,
            self.provenance.clone(),
        )
    }
}
