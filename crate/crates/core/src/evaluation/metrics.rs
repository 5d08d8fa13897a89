use serde::{Deserialize, Serialize};

use crate::error::{argument, check_len, KcError, Result};

/// Contiguous split into the first `s` values and the remaining `n - s`.
pub fn holdout_split(series: &[f64], s: usize) -> Result<(&[f64], &[f64])> {
    let n = series.len();
    if s == 0 || s >= n {
        return Err(argument(format!("split point {s} must lie in 1..{n}")));
    }
    Ok(series.split_at(s))
}

/// Which observations scale the MASE denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaseDenominator {
    /// `1/(n-1) Σ_{i=2..n} |y_i - y_{i-1}|` over the whole series.
    #[default]
    FullSeries,
    /// The same sum over the training split only.
    TrainOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaseOptions {
    pub denominator: MaseDenominator,
    /// Use the signed mean error `ŷ - y` in the numerator instead of its
    /// absolute value. Only for auditing against the literal formula; can be
    /// negative.
    pub signed_numerator: bool,
}

/// Mean absolute scaled error with the default options.
pub fn mase(forecast: &[f64], test: &[f64], full_series: &[f64], s: usize) -> Result<f64> {
    mase_with(forecast, test, full_series, s, MaseOptions::default())
}

pub fn mase_with(
    forecast: &[f64],
    test: &[f64],
    full_series: &[f64],
    s: usize,
    opts: MaseOptions,
) -> Result<f64> {
    let n = full_series.len();
    if s == 0 || s >= n {
        return Err(argument(format!("split point {s} must lie in 1..{n}")));
    }
    check_len("MASE test values", n - s, test.len())?;
    check_len("MASE forecast", n - s, forecast.len())?;

    let numerator = forecast
        .iter()
        .zip(test)
        .map(|(f, y)| {
            if opts.signed_numerator {
                f - y
            } else {
                (f - y).abs()
            }
        })
        .sum::<f64>()
        / test.len() as f64;

    let scope = match opts.denominator {
        MaseDenominator::FullSeries => full_series,
        MaseDenominator::TrainOnly => &full_series[..s],
    };
    if scope.len() < 2 {
        return Err(KcError::UndefinedMase);
    }
    let denominator = scope.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()
        / (scope.len() - 1) as f64;
    if denominator == 0.0 {
        return Err(KcError::UndefinedMase);
    }
    Ok(numerator / denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_lengths() {
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        let (a, b) = holdout_split(&v, 7).unwrap();
        assert_eq!((a.len(), b.len()), (7, 3));
        assert_eq!(holdout_split(&v, 9).unwrap().1, &[9.0]);
        assert!(holdout_split(&v, 0).is_err());
        assert!(holdout_split(&v, 10).is_err());
    }

    #[test]
    fn hand_cases() {
        let ramp = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(mase(&[5.0, 6.0], &[5.0, 6.0], &ramp, 4).unwrap(), 0.0);
        let zig = [0.0, 2.0, 0.0, 2.0, 0.0, 2.0];
        assert_eq!(mase(&[2.0, 2.0], &[0.0, 2.0], &zig, 4).unwrap(), 0.5);
    }

    #[test]
    fn options() {
        let zig = [0.0, 2.0, 0.0, 2.0, 0.0, 2.0];
        let signed = MaseOptions {
            signed_numerator: true,
            ..MaseOptions::default()
        };
        assert_eq!(mase_with(&[0.0, 0.0], &[0.0, 2.0], &zig, 4, signed).unwrap(), -0.5);
        let train_only = MaseOptions {
            denominator: MaseDenominator::TrainOnly,
            ..MaseOptions::default()
        };
        let s = [0.0, 1.0, 2.0, 3.0, 10.0, 20.0];
        assert_eq!(mase_with(&[10.0, 22.0], &[10.0, 20.0], &s, 4, train_only).unwrap(), 1.0);
    }

    #[test]
    fn constant_series_is_undefined() {
        let c = [3.0; 6];
        assert!(matches!(mase(&[3.0, 3.0], &[3.0, 3.0], &c, 4), Err(KcError::UndefinedMase)));
        assert!(mase(&[3.0], &[3.0, 3.0], &c, 4).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariant(
            series in prop::collection::vec(-100.0f64..100.0, 6..30),
            noise in prop::collection::vec(-5.0f64..5.0, 30),
            c in 0.01f64..100.0,
        ) {
            let n = series.len();
            let s = n - 3;
            let test = &series[s..];
            let fc: Vec<f64> = test.iter().zip(&noise).map(|(y, e)| y + e).collect();
            let base = mase(&fc, test, &series, s);
            prop_assume!(base.is_ok());
            let scaled: Vec<f64> = series.iter().map(|v| v * c).collect();
            let fc_scaled: Vec<f64> = fc.iter().map(|v| v * c).collect();
            let m2 = mase(&fc_scaled, &scaled[s..], &scaled, s).unwrap();
            let m1 = base.unwrap();
            prop_assert!((m1 - m2).abs() <= 1e-9 * m1.max(1.0));
        }
    }
}
