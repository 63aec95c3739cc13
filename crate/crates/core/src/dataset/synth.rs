use chrono::{Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::RawSeries;
use crate::error::{ForecastError, Result};

/// First date of every synthetic series.
pub const SYNTHETIC_START: NaiveDate = match NaiveDate::from_ymd_opt(2004, 2, 1) {
    Some(d) => d,
    None => panic!("valid date"),
};

const SINE_PERIOD: f64 = 25.0;
const AR1_COEFFICIENT: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// `sin(2πt/25)` plus small Gaussian noise.
    Sine,
    /// `s_t = 0.9 s_{t-1} + ε_t`.
    Ar1,
    /// Linear trend plus the sine component.
    TrendSine,
}

impl std::str::FromStr for SyntheticKind {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(SyntheticKind::Sine),
            "ar1" => Ok(SyntheticKind::Ar1),
            "trend_sine" => Ok(SyntheticKind::TrendSine),
            other => Err(ForecastError::Format(format!(
                "unknown synthetic kind `{other}`"
            ))),
        }
    }
}

fn rescale_unit(values: &mut [f64]) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    for v in values.iter_mut() {
        *v = if span > 0.0 { (*v - min) / span } else { 0.5 };
    }
}

/// Deterministic daily series starting at [`SYNTHETIC_START`]. The target is
/// the latent signal rescaled into `[0, 1]`; feature `k` is the signal lagged
/// by `k` days plus noise of standard deviation `0.02·k`, also rescaled.
pub fn generate_synthetic(
    kind: SyntheticKind,
    length: usize,
    n_features: usize,
    seed: u64,
) -> Result<RawSeries> {
    if length < 8 {
        return Err(ForecastError::InsufficientData(format!(
            "synthetic series needs at least 8 rows, got {length}"
        )));
    }
    if n_features == 0 {
        return Err(ForecastError::Format(
            "at least one feature is required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");

    let tau = std::f64::consts::TAU;
    let mut signal = Vec::with_capacity(length);
    let mut prev = 0.0;
    for t in 0..length {
        let x = t as f64;
        let noise = unit.sample(&mut rng);
        let s = match kind {
            SyntheticKind::Sine => (tau * x / SINE_PERIOD).sin() + 0.05 * noise,
            SyntheticKind::TrendSine => {
                2.0 * x / length as f64 + (tau * x / SINE_PERIOD).sin() + 0.05 * noise
            }
            SyntheticKind::Ar1 => {
                prev = AR1_COEFFICIENT * prev + noise;
                prev
            }
        };
        signal.push(s);
    }

    let mut columns: Vec<Vec<f64>> = (0..n_features)
        .map(|k| {
            (0..length)
                .map(|t| signal[t.saturating_sub(k)] + 0.02 * k as f64 * unit.sample(&mut rng))
                .collect()
        })
        .collect();
    for c in columns.iter_mut() {
        rescale_unit(c);
    }
    let mut target = signal;
    rescale_unit(&mut target);

    Ok(RawSeries {
        dates: (0..length)
            .map(|t| SYNTHETIC_START + Duration::days(t as i64))
            .collect(),
        features: (0..length)
            .map(|t| columns.iter().map(|c| c[t]).collect())
            .collect(),
        target,
        feature_names: (1..=n_features).map(|k| format!("f{k}")).collect(),
        target_name: "target".into(),
    })
}
