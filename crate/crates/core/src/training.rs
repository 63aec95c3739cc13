//! Loss, Adam, the epoch loop and batch prediction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::WindowedDataset;
use crate::error::{ForecastError, Result};
use crate::model::Forecaster;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Shuffle batch order each epoch. Off by default: batches run in
    /// chronological order.
    pub shuffle: bool,
    /// Parameter groups (tensor names) excluded from updates.
    #[serde(default)]
    pub frozen: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 16,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            shuffle: false,
            frozen: Vec::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(ForecastError::Format(format!("train config: {msg}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(0.0 < self.adam_beta1 && self.adam_beta1 < 1.0) {
            return bad("adam_beta1 must lie in (0, 1)");
        }
        if !(0.0 < self.adam_beta2 && self.adam_beta2 < 1.0) {
            return bad("adam_beta2 must lie in (0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub train_mse: f64,
    pub train_mae: f64,
    /// `None` when the test split is empty.
    pub test_mse: Option<f64>,
    pub test_mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LossHistory {
    /// Metrics of the untrained model.
    pub initial: Option<Metrics>,
    /// One record per completed epoch, epochs numbered from 1.
    pub records: Vec<EpochRecord>,
}

impl LossHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

fn check_pair(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.len() != targets.len() {
        return Err(ForecastError::Shape(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(ForecastError::EmptyInput("loss over zero samples".into()));
    }
    Ok(())
}

/// Mean squared error and its gradient `2(p - t)/N`.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_pair(predictions, targets)?;
    let n = predictions.len() as f64;
    let mut loss = 0.0;
    let grad = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

pub fn mae_metric(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(predictions, targets)?;
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(total / predictions.len() as f64)
}

/// Adam first/second moments and step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update. Pure: returns new params and moments.
pub fn adam_step(
    params: &[f64],
    grads: &[f64],
    moments: &AdamState,
    config: &TrainConfig,
) -> Result<(Vec<f64>, AdamState)> {
    let n = params.len();
    if grads.len() != n || moments.m.len() != n || moments.v.len() != n {
        return Err(ForecastError::Shape(format!(
            "adam: {} params, {} grads, moments ({}, {})",
            n,
            grads.len(),
            moments.m.len(),
            moments.v.len()
        )));
    }
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let t = moments.t + 1;
    let c1 = 1.0 - b1.powf(t as f64);
    let c2 = 1.0 - b2.powf(t as f64);
    let mut next = AdamState {
        m: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        t,
    };
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let g = grads[k];
        let m = b1 * moments.m[k] + (1.0 - b1) * g;
        let v = b2 * moments.v[k] + (1.0 - b2) * g * g;
        let m_hat = m / c1;
        let v_hat = v / c2;
        out.push(params[k] - config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_epsilon));
        next.m.push(m);
        next.v.push(v);
    }
    Ok((out, next))
}

/// One prediction per window, in order.
pub fn predict<M: Forecaster>(model: &M, dataset: &WindowedDataset) -> Result<Vec<f64>> {
    predict_batched(model, dataset, 1)
}

/// Same as [`predict`], evaluated `batch_size` windows at a time.
pub fn predict_batched<M: Forecaster>(
    model: &M,
    dataset: &WindowedDataset,
    batch_size: usize,
) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Ok(Vec::new());
    }
    if dataset.n_features != model.input_width() {
        return Err(ForecastError::Shape(format!(
            "dataset has {} features, model expects {}",
            dataset.n_features,
            model.input_width()
        )));
    }
    let mut out = Vec::with_capacity(dataset.len());
    for chunk in dataset.samples.chunks(batch_size.max(1)) {
        for s in chunk {
            out.push(model.predict(&s.window)?);
        }
    }
    Ok(out)
}

fn evaluate<M: Forecaster>(model: &M, dataset: &WindowedDataset) -> Result<Option<(f64, f64)>> {
    if dataset.is_empty() {
        return Ok(None);
    }
    let preds = predict(model, dataset)?;
    let targets = dataset.targets();
    let (mse, _) = mse_loss(&preds, &targets)?;
    let mae = mae_metric(&preds, &targets)?;
    Ok(Some((mse, mae)))
}

fn metrics<M: Forecaster>(
    model: &M,
    train: &WindowedDataset,
    test: &WindowedDataset,
) -> Result<Metrics> {
    let (train_mse, train_mae) =
        evaluate(model, train)?.ok_or_else(|| ForecastError::EmptyInput("train split".into()))?;
    let test_metrics = evaluate(model, test)?;
    Ok(Metrics {
        train_mse,
        train_mae,
        test_mse: test_metrics.map(|m| m.0),
        test_mae: test_metrics.map(|m| m.1),
    })
}

/// Mask with `true` at every flat position that may be updated.
fn trainable_mask<M: Forecaster>(model: &M, frozen: &[String]) -> Result<Vec<bool>> {
    let groups = model.groups();
    for name in frozen {
        if !groups.iter().any(|(g, _)| g == name) {
            return Err(ForecastError::Format(format!(
                "cannot freeze unknown parameter group `{name}`"
            )));
        }
    }
    Ok(groups
        .iter()
        .flat_map(|(name, len)| {
            let keep = !frozen.iter().any(|f| f == name);
            std::iter::repeat(keep).take(*len)
        })
        .collect())
}

/// Fits `model` to `train` by mini-batch Adam on the MSE, recording train
/// and test metrics after every epoch. Within a batch, per-sample gradients
/// are summed in sample order and then averaged.
pub fn train<M: Forecaster>(
    model: &M,
    train: &WindowedDataset,
    test: &WindowedDataset,
    config: &TrainConfig,
) -> Result<(M, LossHistory)> {
    config.validate()?;
    if train.is_empty() {
        return Err(ForecastError::EmptyInput("train split".into()));
    }
    let mut model = model.clone();
    let mask = trainable_mask(&model, &config.frozen)?;
    let mut history = LossHistory {
        initial: Some(metrics(&model, train, test)?),
        records: Vec::with_capacity(config.epochs),
    };
    let mut flat = model.flat();
    let mut adam = AdamState::new(flat.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let batches: Vec<&[crate::dataset::Sample]> = train.samples.chunks(config.batch_size).collect();
    let mut order: Vec<usize> = (0..batches.len()).collect();

    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for &b in &order {
            let batch = batches[b];
            let mut grad = vec![0.0; flat.len()];
            for sample in batch {
                let (pred, cache) = model.forward(&sample.window)?;
                // d/dpred of (pred - target)² averaged over the batch
                let upstream = 2.0 * (pred - sample.target) / batch.len() as f64;
                let g = model.backward(&cache, upstream)?;
                for (acc, x) in grad.iter_mut().zip(&g) {
                    *acc += x;
                }
            }
            for (g, &keep) in grad.iter_mut().zip(&mask) {
                if !keep {
                    *g = 0.0;
                }
            }
            let (next, moments) = adam_step(&flat, &grad, &adam, config)?;
            flat = next;
            adam = moments;
            model.set_flat(&flat)?;
        }
        let m = metrics(&model, train, test).map_err(|e| match e {
            ForecastError::Numeric(msg) => {
                ForecastError::Numeric(format!("training diverged in epoch {epoch}: {msg}"))
            }
            other => other,
        })?;
        let finite = m.train_mse.is_finite()
            && m.train_mae.is_finite()
            && m.test_mse.map_or(true, f64::is_finite)
            && m.test_mae.map_or(true, f64::is_finite);
        if !finite {
            return Err(ForecastError::Numeric(format!(
                "training diverged in epoch {epoch}: non-finite loss"
            )));
        }
        history.records.push(EpochRecord { epoch, metrics: m });
    }
    Ok((model, history))
}
