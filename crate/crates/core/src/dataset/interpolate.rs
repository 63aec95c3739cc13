use chrono::{Duration, NaiveDate};

use super::RawSeries;
use crate::error::{ForecastError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    /// Natural cubic spline (zero second derivative at both ends).
    Cubic,
}

impl std::str::FromStr for Interpolation {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Interpolation::Linear),
            "cubic" => Ok(Interpolation::Cubic),
            other => Err(ForecastError::Format(format!(
                "unknown interpolation method `{other}`"
            ))),
        }
    }
}

/// Second derivatives of the natural cubic spline through `(xs, ys)`.
/// `xs` must be strictly increasing with at least two knots.
pub fn natural_cubic_spline(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        diag[i] = 2.0 * (h[i] + h[i + 1]);
        upper[i] = h[i + 1];
        rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
    }
    for i in 1..k {
        let w = h[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
    m
}

fn eval_spline(xs: &[f64], ys: &[f64], m: &[f64], seg: usize, x: f64) -> f64 {
    let h = xs[seg + 1] - xs[seg];
    let a = xs[seg + 1] - x;
    let b = x - xs[seg];
    if b == 0.0 {
        return ys[seg];
    }
    m[seg] * a * a * a / (6.0 * h)
        + m[seg + 1] * b * b * b / (6.0 * h)
        + (ys[seg] / h - m[seg] * h / 6.0) * a
        + (ys[seg + 1] / h - m[seg + 1] * h / 6.0) * b
}

/// Resamples `series` to one row per calendar day from its first to its last
/// date inclusive. Original rows are reproduced exactly at their dates.
pub fn interpolate_to_daily(series: &RawSeries, method: Interpolation) -> Result<RawSeries> {
    series.validate()?;
    if series.len() < 2 {
        return Err(ForecastError::InsufficientData(format!(
            "interpolation needs at least 2 rows, got {}",
            series.len()
        )));
    }
    let start = series.dates[0];
    let end = *series.dates.last().expect("len >= 2");
    let n_days = (end - start).num_days() as usize + 1;
    let knots: Vec<f64> = series
        .dates
        .iter()
        .map(|d| (*d - start).num_days() as f64)
        .collect();

    let n_cols = series.n_features() + 1;
    let columns: Vec<Vec<f64>> = (0..n_cols).map(|c| series.column(c)).collect();
    let curvature: Vec<Vec<f64>> = match method {
        Interpolation::Cubic => columns
            .iter()
            .map(|ys| natural_cubic_spline(&knots, ys))
            .collect(),
        Interpolation::Linear => Vec::new(),
    };

    let mut out = RawSeries {
        dates: Vec::with_capacity(n_days),
        features: Vec::with_capacity(n_days),
        target: Vec::with_capacity(n_days),
        feature_names: series.feature_names.clone(),
        target_name: series.target_name.clone(),
    };
    let mut seg = 0;
    for day in 0..n_days {
        let x = day as f64;
        while seg + 2 < knots.len() && x >= knots[seg + 1] {
            seg += 1;
        }
        let knot_hit = if x == knots[seg] {
            Some(seg)
        } else if x == knots[seg + 1] {
            Some(seg + 1)
        } else {
            None
        };
        let mut row: Vec<f64> = (0..n_cols)
            .map(|c| {
                let ys = &columns[c];
                if let Some(k) = knot_hit {
                    return ys[k];
                }
                match method {
                    Interpolation::Linear => {
                        let t = (x - knots[seg]) / (knots[seg + 1] - knots[seg]);
                        ys[seg] + (ys[seg + 1] - ys[seg]) * t
                    }
                    Interpolation::Cubic => eval_spline(&knots, ys, &curvature[c], seg, x),
                }
            })
            .collect();
        let target = row.pop().expect("at least the target column");
        out.dates.push(start + Duration::days(day as i64));
        out.features.push(row);
        out.target.push(target);
    }
    Ok(out)
}

/// First day of each month from `(y0, m0)` through `(y1, m1)` inclusive.
pub fn month_starts(y0: i32, m0: u32, y1: i32, m1: u32) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let (mut y, mut m) = (y0, m0);
    while (y, m) <= (y1, m1) {
        out.push(NaiveDate::from_ymd_opt(y, m, 1).expect("valid month"));
        m += 1;
        if m == 13 {
            m = 1;
            y += 1;
        }
    }
    out
}
