//! JSON reports and the CSV series behind the loss and overlay plots.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qlstm_forecast::training::{mae_metric, mse_loss, LossHistory, Metrics};
use qlstm_forecast::ModelKind;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub timestamp: String,
    pub actual: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model_kind: ModelKind,
    /// Windows in the train split; the rest of `predictions` is the test split.
    pub train_samples: usize,
    pub test_samples: usize,
    pub loss_history: LossHistory,
    /// One row per window of the whole dataset, in de-normalized units.
    pub predictions: Vec<PredictionRow>,
    /// Final-epoch metrics in normalized units (the initial metrics when
    /// trained for zero epochs).
    pub summary: Option<Metrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mse: f64,
    pub mae: f64,
}

impl ErrorSummary {
    pub fn of(predicted: &[f64], actual: &[f64]) -> CliResult<Self> {
        Ok(ErrorSummary {
            mse: mse_loss(predicted, actual)?.0,
            mae: mae_metric(predicted, actual)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub timestamp: String,
    pub actual: f64,
    pub lstm_pred: f64,
    pub qlstm_pred: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub lstm: ErrorSummary,
    pub qlstm: ErrorSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub head: Option<usize>,
    /// Computed over exactly the rows in `overlay`, in de-normalized units.
    pub summary: CompareSummary,
    pub overlay: Vec<OverlayRow>,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("writing {}: {e}", path.display()))
}

/// Writes `header` then one record per row. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| csv_error(path, e))
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> CliResult<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.timestamp.clone(),
                r.actual.to_string(),
                r.predicted.to_string(),
            ]
        })
        .collect();
    write_rows(path, &["timestamp", "actual", "predicted"], &body)
}

pub fn write_overlay(path: &Path, rows: &[OverlayRow]) -> CliResult<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.timestamp.clone(),
                r.actual.to_string(),
                r.lstm_pred.to_string(),
                r.qlstm_pred.to_string(),
            ]
        })
        .collect();
    write_rows(
        path,
        &["timestamp", "actual", "lstm_pred", "qlstm_pred"],
        &body,
    )
}

pub fn write_loss_history(path: &Path, history: &LossHistory) -> CliResult<()> {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let body: Vec<Vec<String>> = history
        .records
        .iter()
        .map(|r| {
            vec![
                r.epoch.to_string(),
                r.metrics.train_mse.to_string(),
                opt(r.metrics.test_mse),
                r.metrics.train_mae.to_string(),
                opt(r.metrics.test_mae),
            ]
        })
        .collect();
    write_rows(
        path,
        &["epoch", "train_mse", "test_mse", "train_mae", "test_mae"],
        &body,
    )
}
