use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::series::{Provenance, TimeSeries, M4_MONTHLY_HORIZON};
use crate::error::{argument, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// `sin(2πt / period)`
    Sine,
    /// Sine on a slow linear trend.
    TrendSine,
    /// Gaussian random walk with step sd 0.1.
    RandomWalk,
}

impl std::str::FromStr for SeriesKind {
    type Err = crate::error::KcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(Self::Sine),
            "trend_sine" | "trend-sine" => Ok(Self::TrendSine),
            "random_walk" | "random-walk" => Ok(Self::RandomWalk),
            other => Err(argument(format!("unknown series kind {other:?}"))),
        }
    }
}

const TREND_SLOPE: f64 = 0.005;
const WALK_STEP_SD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub id: String,
    pub kind: SeriesKind,
    pub n: usize,
    pub noise_sd: f64,
    pub n_outliers: usize,
    /// Spike size in units of `noise_sd` (or of the clean series' standard
    /// deviation when the noise is zero).
    pub outlier_magnitude: f64,
    pub seed: u64,
    pub period: usize,
    /// Length of the test split.
    pub horizon: usize,
    /// No outlier is placed before this position.
    pub margin: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            id: "synthetic".into(),
            kind: SeriesKind::Sine,
            n: 240,
            noise_sd: 0.05,
            n_outliers: 0,
            outlier_magnitude: 8.0,
            seed: 0,
            period: 12,
            horizon: M4_MONTHLY_HORIZON,
            margin: 12,
        }
    }
}

/// Deterministic clean signal plus Gaussian noise, with spikes of
/// `±outlier_magnitude` sd injected at seeded positions in
/// `[margin, n - horizon)`.
pub fn synthesize(spec: &SynthSpec) -> Result<TimeSeries> {
    let n = spec.n;
    if spec.horizon == 0 || spec.horizon >= n {
        return Err(argument(format!("horizon {} must lie in 1..{n}", spec.horizon)));
    }
    if spec.n_outliers * 10 >= n && spec.n_outliers > 0 {
        return Err(argument(format!(
            "{} outliers is too many for {n} points (must be < n/10)",
            spec.n_outliers
        )));
    }
    if !(spec.noise_sd >= 0.0) || spec.period == 0 {
        return Err(argument("noise sd must be non-negative and period positive"));
    }
    let split = n - spec.horizon;
    if spec.margin + spec.n_outliers > split {
        return Err(argument("not enough training positions for the outliers"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase = |t: usize| (2.0 * PI * t as f64 / spec.period as f64).sin();
    let clean: Vec<f64> = match spec.kind {
        SeriesKind::Sine => (0..n).map(phase).collect(),
        SeriesKind::TrendSine => (0..n).map(|t| TREND_SLOPE * t as f64 + phase(t)).collect(),
        SeriesKind::RandomWalk => {
            let step = Normal::new(0.0, WALK_STEP_SD).expect("valid sd");
            let mut level = 0.0;
            (0..n)
                .map(|_| {
                    level += step.sample(&mut rng);
                    level
                })
                .collect()
        }
    };

    let mut values = clean.clone();
    if spec.noise_sd > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sd).expect("valid sd");
        for v in &mut values {
            *v += noise.sample(&mut rng);
        }
    }

    let unit = if spec.noise_sd > 0.0 {
        spec.noise_sd
    } else {
        let mean = clean.iter().sum::<f64>() / n as f64;
        (clean.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let mut outliers: Vec<usize> = index::sample(&mut rng, split - spec.margin, spec.n_outliers)
        .into_iter()
        .map(|i| i + spec.margin)
        .collect();
    outliers.sort_unstable();
    for &i in &outliers {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        values[i] += sign * spec.outlier_magnitude * unit;
    }
    assert!(outliers.iter().all(|&i| i < split), "outlier placed in test split");

    TimeSeries::with_provenance(
        spec.id.clone(),
        values,
        split,
        Provenance::Synthetic {
            clean_values: clean,
            outlier_indices: outliers,
        },
    )
}

/// Corrupted corpus cycling through the three kinds, with 2 to 5 spikes per
/// series. Series `k` is built from seed `seed * 1000 + k`.
pub fn synthesize_corpus(count: usize, seed: u64, template: &SynthSpec) -> Result<Vec<TimeSeries>> {
    const KINDS: [SeriesKind; 3] = [SeriesKind::Sine, SeriesKind::TrendSine, SeriesKind::RandomWalk];
    (0..count)
        .map(|k| {
            let spec = SynthSpec {
                id: format!("{}-{k:03}", template.id),
                kind: KINDS[k % KINDS.len()],
                n_outliers: 2 + k % 4,
                seed: seed.wrapping_mul(1000).wrapping_add(k as u64),
                ..template.clone()
            };
            synthesize(&spec)
        })
        .collect()
}
