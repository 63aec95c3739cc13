use chrono::NaiveDate;

use super::RawSeries;
use crate::error::{ForecastError, Result};

/// One supervised example: `lookback` consecutive feature rows and the
/// target of the row right after them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub window: Vec<Vec<f64>>,
    pub target: f64,
    /// Date of the target row.
    pub timestamp: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub lookback: usize,
    pub n_features: usize,
    pub samples: Vec<Sample>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.target).collect()
    }

    pub fn timestamps(&self) -> Vec<NaiveDate> {
        self.samples.iter().map(|s| s.timestamp).collect()
    }

    /// Same lookback and width, different samples.
    pub fn with_samples(&self, samples: Vec<Sample>) -> Self {
        WindowedDataset {
            lookback: self.lookback,
            n_features: self.n_features,
            samples,
        }
    }
}

/// Sample `j` covers rows `[j, j + lookback)` and targets row `j + lookback`.
pub fn make_windows(series: &RawSeries, lookback: usize) -> Result<WindowedDataset> {
    if lookback == 0 {
        return Err(ForecastError::Format("lookback must be at least 1".into()));
    }
    if series.len() <= lookback {
        return Err(ForecastError::InsufficientData(format!(
            "{} rows cannot form a window of lookback {lookback} plus a target",
            series.len()
        )));
    }
    let samples = (0..series.len() - lookback)
        .map(|j| Sample {
            window: series.features[j..j + lookback].to_vec(),
            target: series.target[j + lookback],
            timestamp: series.dates[j + lookback],
        })
        .collect();
    Ok(WindowedDataset {
        lookback,
        n_features: series.n_features(),
        samples,
    })
}

/// First `floor(train_fraction * n)` samples train, the rest test.
pub fn split_chronological(
    dataset: &WindowedDataset,
    train_fraction: f64,
) -> Result<(WindowedDataset, WindowedDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ForecastError::Format(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    if dataset.is_empty() {
        return Err(ForecastError::EmptyInput(
            "cannot split an empty dataset".into(),
        ));
    }
    let cut = (train_fraction * dataset.len() as f64).floor() as usize;
    let (train, test) = dataset.samples.split_at(cut);
    Ok((
        dataset.with_samples(train.to_vec()),
        dataset.with_samples(test.to_vec()),
    ))
}
