//! Command-line front end. Every command is a pure function of its flags
//! and input files; all randomness comes from `--seed`.

pub mod error;
pub mod model_file;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qlstm_forecast::dataset::{
    fit_normalize, generate_synthetic, interpolate_to_daily, load_csv, make_windows,
    split_chronological, write_csv, Interpolation, RawSeries, Scaler, SyntheticKind,
    WindowedDataset,
};
use qlstm_forecast::lstm::LstmParams;
use qlstm_forecast::qlstm::QlstmParams;
use qlstm_forecast::training::{predict, train, TrainConfig};
use qlstm_forecast::vqc::{Encoding, VqcDescriptor};
use qlstm_forecast::{ForecastError, Model};

pub use error::{CliError, CliResult};
use model_file::ModelFile;
use report::{CompareReport, CompareSummary, ErrorSummary, OverlayRow, PredictionRow, TrainReport};

/// Chronological share of the data used for fitting (scaler and model).
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Parser)]
#[command(
    name = "qlstm-forecast",
    version,
    about = "LSTM and hybrid QLSTM time-series forecasting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write model.json, report.json and plot series.
    Train(TrainArgs),
    /// Predict with a saved model; writes timestamp,actual,predicted.
    Predict(PredictArgs),
    /// Overlay the predictions of an LSTM and a QLSTM model file.
    Compare(CompareArgs),
    /// Generate a synthetic dataset in the standard CSV schema.
    Synth(SynthArgs),
    /// Resample a dataset to one row per calendar day.
    Interpolate(InterpolateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Lstm,
    Qlstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    #[value(name = "angle_arctan")]
    AngleArctan,
    #[value(name = "angle_linear")]
    AngleLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Sine,
    Ar1,
    #[value(name = "trend_sine")]
    TrendSine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Linear,
    Cubic,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub lookback: usize,
    #[arg(long, default_value_t = 4)]
    pub hidden: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// QLSTM register size.
    #[arg(long, default_value_t = 4)]
    pub qubits: usize,
    /// QLSTM variational depth.
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, value_enum, default_value = "angle_arctan")]
    pub encoding: EncodingArg,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub lstm_file: PathBuf,
    #[arg(long)]
    pub qlstm_file: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for overlay.csv and report.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Keep only the first N overlay rows.
    #[arg(long)]
    pub head: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 200)]
    pub len: usize,
    #[arg(long, default_value_t = 1)]
    pub features: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "linear")]
    pub method: MethodArg,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Interpolate(a) => cmd_interpolate(&a),
    }
}

fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", path.display())))
}

/// Prediction rows for every window of `windows`, which must have been cut
/// from `raw` (so window `j` targets raw row `j + lookback`).
fn prediction_rows(
    model: &Model,
    raw: &RawSeries,
    windows: &WindowedDataset,
    scaler: &Scaler,
) -> CliResult<Vec<PredictionRow>> {
    let preds = predict(model, windows)?;
    Ok(windows
        .samples
        .iter()
        .enumerate()
        .zip(preds)
        .map(|((j, s), p)| PredictionRow {
            timestamp: s.timestamp.to_string(),
            actual: raw.target[j + windows.lookback],
            predicted: scaler.denormalize_target(p),
        })
        .collect())
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<()> {
    let raw = load_csv(&a.data)?;
    let (normalized, scaler) = fit_normalize(&raw, TRAIN_FRACTION)?;
    let windows = make_windows(&normalized, a.lookback)?;
    let (train_set, test_set) = split_chronological(&windows, TRAIN_FRACTION)?;
    if a.hidden == 0 {
        return Err(ForecastError::Format("--hidden must be positive".into()).into());
    }

    let input = raw.n_features();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let model = match a.model {
        ModelArg::Lstm => Model::Lstm(LstmParams::init(input, a.hidden, &mut rng)),
        ModelArg::Qlstm => {
            let encoding = match a.encoding {
                EncodingArg::AngleArctan => Encoding::AngleArctan,
                EncodingArg::AngleLinear => Encoding::AngleLinear,
            };
            let d = VqcDescriptor::new(a.qubits, a.layers, encoding)?;
            Model::Qlstm(QlstmParams::init(d, input, a.hidden, &mut rng))
        }
    };
    let config = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let (trained, history) = train(&model, &train_set, &test_set, &config)?;

    let predictions = prediction_rows(&trained, &raw, &windows, &scaler)?;
    let summary = history.last().map(|r| r.metrics).or(history.initial);
    let report = TrainReport {
        model_kind: trained.kind(),
        train_samples: train_set.len(),
        test_samples: test_set.len(),
        loss_history: history,
        predictions,
        summary,
    };
    let file = ModelFile::new(&trained, a.lookback, scaler, config, a.seed);

    create_dir(&a.out)?;
    file.save(&a.out.join("model.json"))?;
    report::write_json(&report, &a.out.join("report.json"))?;
    report::write_loss_history(&a.out.join("loss_history.csv"), &report.loss_history)?;
    report::write_predictions(&a.out.join("predictions.csv"), &report.predictions)?;
    Ok(())
}

/// Loads a model file and windows `raw` with the file's own scaler.
fn prepare(file: &ModelFile, raw: &RawSeries) -> CliResult<(Model, WindowedDataset)> {
    let model = file.model()?;
    if raw.n_features() != file.hyperparameters.input {
        return Err(ForecastError::Shape(format!(
            "data has {} features, model was trained on {}",
            raw.n_features(),
            file.hyperparameters.input
        ))
        .into());
    }
    let normalized = file.scaler.apply(raw)?;
    let windows = make_windows(&normalized, file.hyperparameters.lookback)?;
    Ok((model, windows))
}

pub fn cmd_predict(a: &PredictArgs) -> CliResult<()> {
    let file = ModelFile::load(&a.model_file)?;
    let raw = load_csv(&a.data)?;
    let (model, windows) = prepare(&file, &raw)?;
    let rows = prediction_rows(&model, &raw, &windows, &file.scaler)?;
    report::write_predictions(&a.out, &rows)
}

pub fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    let lstm_file = ModelFile::load(&a.lstm_file)?;
    let qlstm_file = ModelFile::load(&a.qlstm_file)?;
    let raw = load_csv(&a.data)?;
    if lstm_file.hyperparameters.lookback != qlstm_file.hyperparameters.lookback {
        return Err(ForecastError::Shape(format!(
            "lookbacks differ ({} vs {}); overlay rows would not align",
            lstm_file.hyperparameters.lookback, qlstm_file.hyperparameters.lookback
        ))
        .into());
    }
    let (lstm, lstm_windows) = prepare(&lstm_file, &raw)?;
    let (qlstm, qlstm_windows) = prepare(&qlstm_file, &raw)?;
    let lstm_rows = prediction_rows(&lstm, &raw, &lstm_windows, &lstm_file.scaler)?;
    let qlstm_rows = prediction_rows(&qlstm, &raw, &qlstm_windows, &qlstm_file.scaler)?;

    let keep = a.head.unwrap_or(usize::MAX);
    let overlay: Vec<OverlayRow> = lstm_rows
        .iter()
        .zip(&qlstm_rows)
        .take(keep)
        .map(|(l, q)| OverlayRow {
            timestamp: l.timestamp.clone(),
            actual: l.actual,
            lstm_pred: l.predicted,
            qlstm_pred: q.predicted,
        })
        .collect();
    if overlay.is_empty() {
        return Err(ForecastError::EmptyInput("overlay has no rows".into()).into());
    }
    let actual: Vec<f64> = overlay.iter().map(|r| r.actual).collect();
    let lstm_pred: Vec<f64> = overlay.iter().map(|r| r.lstm_pred).collect();
    let qlstm_pred: Vec<f64> = overlay.iter().map(|r| r.qlstm_pred).collect();
    let report = CompareReport {
        head: a.head,
        summary: CompareSummary {
            lstm: ErrorSummary::of(&lstm_pred, &actual)?,
            qlstm: ErrorSummary::of(&qlstm_pred, &actual)?,
        },
        overlay,
    };
    create_dir(&a.out)?;
    report::write_overlay(&a.out.join("overlay.csv"), &report.overlay)?;
    report::write_json(&report, &a.out.join("report.json"))
}

pub fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let kind = match a.kind {
        KindArg::Sine => SyntheticKind::Sine,
        KindArg::Ar1 => SyntheticKind::Ar1,
        KindArg::TrendSine => SyntheticKind::TrendSine,
    };
    let series = generate_synthetic(kind, a.len, a.features, a.seed)?;
    Ok(write_csv(&series, &a.out)?)
}

pub fn cmd_interpolate(a: &InterpolateArgs) -> CliResult<()> {
    let method = match a.method {
        MethodArg::Linear => Interpolation::Linear,
        MethodArg::Cubic => Interpolation::Cubic,
    };
    let series = load_csv(&a.input)?;
    Ok(write_csv(&interpolate_to_daily(&series, method)?, &a.out)?)
}
