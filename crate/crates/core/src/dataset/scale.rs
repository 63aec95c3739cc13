use serde::{Deserialize, Serialize};

use super::RawSeries;
use crate::error::{ForecastError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub min: f64,
    pub max: f64,
    /// `max == min` on the fitted rows; such columns normalize to 0.5.
    pub constant: bool,
}

impl ColumnScale {
    fn fit(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ColumnScale {
            min,
            max,
            constant: max == min,
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if self.constant {
            0.5
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    #[inline]
    pub fn invert(&self, x: f64) -> f64 {
        if self.constant {
            self.min
        } else {
            x * (self.max - self.min) + self.min
        }
    }
}

/// Per-column min-max statistics for `[features..., target]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub features: Vec<ColumnScale>,
    pub target: ColumnScale,
}

impl Scaler {
    /// Fits on the first `rows` rows only.
    pub fn fit(series: &RawSeries, rows: usize) -> Result<Self> {
        if rows == 0 || rows > series.len() {
            return Err(ForecastError::InsufficientData(format!(
                "cannot fit a scaler on {rows} of {} rows",
                series.len()
            )));
        }
        let features = (0..series.n_features())
            .map(|c| {
                let col: Vec<f64> = series.features[..rows].iter().map(|r| r[c]).collect();
                ColumnScale::fit(&col)
            })
            .collect();
        Ok(Scaler {
            features,
            target: ColumnScale::fit(&series.target[..rows]),
        })
    }

    fn check(&self, series: &RawSeries) -> Result<()> {
        if series.n_features() != self.features.len() {
            return Err(ForecastError::Shape(format!(
                "series has {} features, scaler was fitted on {}",
                series.n_features(),
                self.features.len()
            )));
        }
        Ok(())
    }

    fn map(&self, series: &RawSeries, invert: bool) -> Result<RawSeries> {
        self.check(series)?;
        let f = |s: &ColumnScale, x: f64| if invert { s.invert(x) } else { s.apply(x) };
        Ok(RawSeries {
            dates: series.dates.clone(),
            features: series
                .features
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&self.features)
                        .map(|(x, s)| f(s, *x))
                        .collect()
                })
                .collect(),
            target: series.target.iter().map(|x| f(&self.target, *x)).collect(),
            feature_names: series.feature_names.clone(),
            target_name: series.target_name.clone(),
        })
    }

    pub fn apply(&self, series: &RawSeries) -> Result<RawSeries> {
        self.map(series, false)
    }

    pub fn invert(&self, series: &RawSeries) -> Result<RawSeries> {
        self.map(series, true)
    }

    pub fn denormalize_target(&self, x: f64) -> f64 {
        self.target.invert(x)
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        self.features
            .iter()
            .chain(std::iter::once(&self.target))
            .enumerate()
            .filter_map(|(i, s)| s.constant.then_some(i))
            .collect()
    }
}

/// Fits a [`Scaler`] on the first `floor(train_fraction * n)` rows and
/// returns the normalized series alongside it.
pub fn fit_normalize(series: &RawSeries, train_fraction: f64) -> Result<(RawSeries, Scaler)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ForecastError::Format(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    series.validate()?;
    let cutoff = (train_fraction * series.len() as f64).floor() as usize;
    let scaler = Scaler::fit(series, cutoff)?;
    Ok((scaler.apply(series)?, scaler))
}
