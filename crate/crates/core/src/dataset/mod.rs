//! Data preparation: CSV ingestion, monthly-to-daily interpolation, min-max
//! scaling, lookback windows, chronological splits and synthetic series.
//!
//! CSV schema: a header row, first column `date` (ISO-8601 `YYYY-MM-DD`),
//! then one or more numeric feature columns, then the target column last.

mod csv_io;
mod interpolate;
mod scale;
mod synth;
mod window;

use chrono::NaiveDate;

pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to};
pub use interpolate::{interpolate_to_daily, month_starts, natural_cubic_spline, Interpolation};
pub use scale::{fit_normalize, ColumnScale, Scaler};
pub use synth::{generate_synthetic, SyntheticKind, SYNTHETIC_START};
pub use window::{make_windows, split_chronological, Sample, WindowedDataset};

use crate::error::{ForecastError, Result};

/// A dated multivariate series with one target column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub dates: Vec<NaiveDate>,
    /// Row-major: `features[row][column]`.
    pub features: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

impl RawSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Checks row counts, column widths, date ordering and finiteness.
    pub fn validate(&self) -> Result<()> {
        let n = self.dates.len();
        if self.features.len() != n || self.target.len() != n {
            return Err(ForecastError::Shape(format!(
                "{} dates, {} feature rows, {} targets",
                n,
                self.features.len(),
                self.target.len()
            )));
        }
        let width = self.feature_names.len();
        for (r, row) in self.features.iter().enumerate() {
            if row.len() != width {
                return Err(ForecastError::Shape(format!(
                    "row {r} has {} features, header names {width}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(ForecastError::Numeric(format!(
                    "row {r}: non-finite feature {v}"
                )));
            }
        }
        if let Some(r) = self.target.iter().position(|v| !v.is_finite()) {
            return Err(ForecastError::Numeric(format!(
                "row {r}: non-finite target"
            )));
        }
        if let Some(w) = self.dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(ForecastError::Format(format!(
                "dates not strictly increasing at {} -> {}",
                self.dates[w],
                self.dates[w + 1]
            )));
        }
        Ok(())
    }

    /// Column `c` of the combined `[features..., target]` table.
    pub(crate) fn column(&self, c: usize) -> Vec<f64> {
        if c < self.n_features() {
            self.features.iter().map(|row| row[c]).collect()
        } else {
            self.target.clone()
        }
    }
}
