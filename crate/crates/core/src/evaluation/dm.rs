use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{argument, check_len, Result};

/// Significance level of the two-sided test.
pub const DM_ALPHA: f64 = 0.05;

/// Outcome of comparing forecaster A with forecaster B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// A has significantly lower loss.
    WinA,
    /// B has significantly lower loss.
    WinB,
    Draw,
}

impl Verdict {
    pub fn swapped(self) -> Self {
        match self {
            Self::WinA => Self::WinB,
            Self::WinB => Self::WinA,
            Self::Draw => Self::Draw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Positive when A's squared errors are larger on average.
    pub statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Two-sided critical value of the standard normal at `alpha`.
pub fn critical_value(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// Sample autocovariance at `lag` with the `1/T` normalization.
pub fn autocovariance(d: &[f64], lag: usize) -> f64 {
    let t = d.len();
    let mean = d.iter().sum::<f64>() / t as f64;
    (lag..t).map(|i| (d[i] - mean) * (d[i - lag] - mean)).sum::<f64>() / t as f64
}

/// Diebold-Mariano test on squared-error loss differentials
/// `d_t = e_{a,t}² - e_{b,t}²` with long-run variance
/// `γ₀ + 2 Σ_{k=1}^{h-1} γ_k`.
///
/// Identical losses give a statistic of zero. A non-positive long-run variance
/// falls back to `γ₀`. A constant non-zero differential has zero variance and
/// is reported with a statistic of `±f64::MAX`.
pub fn diebold_mariano(errors_a: &[f64], errors_b: &[f64], horizon: usize) -> Result<DmResult> {
    check_len("Diebold-Mariano error vectors", errors_a.len(), errors_b.len())?;
    let t = errors_a.len();
    if t < 4 {
        return Err(argument(format!("Diebold-Mariano needs at least 4 errors, got {t}")));
    }
    if horizon == 0 {
        return Err(argument("Diebold-Mariano horizon must be at least 1"));
    }
    let d: Vec<f64> = errors_a
        .iter()
        .zip(errors_b)
        .map(|(a, b)| a * a - b * b)
        .collect();
    if d.iter().all(|&x| x == 0.0) {
        return Ok(DmResult {
            statistic: 0.0,
            p_value: 1.0,
            verdict: Verdict::Draw,
            note: None,
        });
    }
    let mean = d.iter().sum::<f64>() / t as f64;
    let gamma0 = autocovariance(&d, 0);
    let mut variance = gamma0
        + 2.0
            * (1..horizon.min(t))
                .map(|k| autocovariance(&d, k))
                .sum::<f64>();
    let mut note = None;
    if variance <= 0.0 {
        note = Some(format!(
            "long-run variance {variance:e} is not positive; using lag-0 variance"
        ));
        variance = gamma0;
    }

    let statistic = if variance > 0.0 {
        mean / (variance / t as f64).sqrt()
    } else {
        note = Some("loss differential is constant".into());
        f64::MAX.copysign(mean)
    };
    let p_value = 2.0 * (1.0 - Normal::standard().cdf(statistic.abs()));
    let verdict = if statistic.abs() < critical_value(DM_ALPHA) {
        Verdict::Draw
    } else if statistic > 0.0 {
        Verdict::WinB
    } else {
        Verdict::WinA
    };
    Ok(DmResult {
        statistic,
        p_value,
        verdict,
        note,
    })
}
