//! Named-tensor views over parameter structs, and the [`Forecaster`] trait the
//! training loop is written against.

use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};
use crate::lstm::{lstm_backward, lstm_forward, LstmCache, LstmParams};
use crate::qlstm::{qlstm_backward, qlstm_forward, QlstmCache, QlstmParams};

pub struct TensorRef<'a> {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub values: &'a [f64],
}

impl<'a> TensorRef<'a> {
    pub fn new(name: &'static str, shape: Vec<usize>, values: &'a [f64]) -> Self {
        TensorRef {
            name,
            shape,
            values,
        }
    }
}

pub struct TensorMut<'a> {
    pub name: &'static str,
    pub values: &'a mut [f64],
}

impl<'a> TensorMut<'a> {
    pub fn new(name: &'static str, values: &'a mut [f64]) -> Self {
        TensorMut { name, values }
    }
}

/// A flat, named parameter array as stored in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Anything that exposes its trainable values as an ordered list of named
/// tensors. The order defines the flat layout used by the optimizer.
pub trait Parameterized {
    fn tensors(&self) -> Vec<TensorRef<'_>>;
    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>>;

    fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.values.len()).sum()
    }

    fn flat(&self) -> Vec<f64> {
        self.tensors()
            .iter()
            .flat_map(|t| t.values.iter().copied())
            .collect()
    }

    fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.n_params();
        if flat.len() != expected {
            return Err(ForecastError::Shape(format!(
                "flat parameter vector of length {}, expected {expected}",
                flat.len()
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.values.len();
            t.values.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// `(name, len)` per tensor, in flat order.
    fn groups(&self) -> Vec<(&'static str, usize)> {
        self.tensors()
            .iter()
            .map(|t| (t.name, t.values.len()))
            .collect()
    }

    fn named_arrays(&self) -> Vec<NamedArray> {
        self.tensors()
            .into_iter()
            .map(|t| NamedArray {
                name: t.name.to_string(),
                shape: t.shape,
                values: t.values.to_vec(),
            })
            .collect()
    }

    /// Overwrites every tensor from `arrays`, matched by name and length.
    fn load_named(&mut self, arrays: &[NamedArray]) -> Result<()> {
        let mut tensors = self.tensors_mut();
        if tensors.len() != arrays.len() {
            return Err(ForecastError::Shape(format!(
                "{} parameter arrays supplied, model has {}",
                arrays.len(),
                tensors.len()
            )));
        }
        for (t, a) in tensors.iter_mut().zip(arrays) {
            if t.name != a.name || t.values.len() != a.values.len() {
                return Err(ForecastError::Shape(format!(
                    "parameter `{}` ({} values) does not match model tensor `{}` ({} values)",
                    a.name,
                    a.values.len(),
                    t.name,
                    t.values.len()
                )));
            }
            t.values.copy_from_slice(&a.values);
        }
        Ok(())
    }
}

/// A sequence-to-scalar model the training loop can fit.
pub trait Forecaster: Parameterized + Clone {
    type Cache;

    /// Feature width each window row must have.
    fn input_width(&self) -> usize;

    fn forward(&self, window: &[Vec<f64>]) -> Result<(f64, Self::Cache)>;

    /// Flat gradient (same layout as [`Parameterized::flat`]) of a loss with
    /// `d loss / d prediction = upstream`.
    fn backward(&self, cache: &Self::Cache, upstream: f64) -> Result<Vec<f64>>;

    fn predict(&self, window: &[Vec<f64>]) -> Result<f64> {
        self.forward(window).map(|(p, _)| p)
    }
}

impl Forecaster for LstmParams {
    type Cache = LstmCache;

    fn input_width(&self) -> usize {
        self.input()
    }

    fn forward(&self, window: &[Vec<f64>]) -> Result<(f64, LstmCache)> {
        lstm_forward(self, window)
    }

    fn backward(&self, cache: &LstmCache, upstream: f64) -> Result<Vec<f64>> {
        Ok(lstm_backward(self, cache, upstream)?.flat())
    }
}

impl Forecaster for QlstmParams {
    type Cache = QlstmCache;

    fn input_width(&self) -> usize {
        self.input()
    }

    fn forward(&self, window: &[Vec<f64>]) -> Result<(f64, QlstmCache)> {
        qlstm_forward(self, window)
    }

    fn backward(&self, cache: &QlstmCache, upstream: f64) -> Result<Vec<f64>> {
        Ok(qlstm_backward(self, cache, upstream)?.flat())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lstm,
    Qlstm,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Qlstm => "qlstm",
        })
    }
}

/// Either model family behind one type.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Lstm(LstmParams),
    Qlstm(QlstmParams),
}

pub enum ModelCache {
    Lstm(LstmCache),
    Qlstm(QlstmCache),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Lstm(_) => ModelKind::Lstm,
            Model::Qlstm(_) => ModelKind::Qlstm,
        }
    }
}

impl Parameterized for Model {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        match self {
            Model::Lstm(p) => p.tensors(),
            Model::Qlstm(p) => p.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        match self {
            Model::Lstm(p) => p.tensors_mut(),
            Model::Qlstm(p) => p.tensors_mut(),
        }
    }
}

impl Forecaster for Model {
    type Cache = ModelCache;

    fn input_width(&self) -> usize {
        match self {
            Model::Lstm(p) => p.input_width(),
            Model::Qlstm(p) => p.input_width(),
        }
    }

    fn forward(&self, window: &[Vec<f64>]) -> Result<(f64, ModelCache)> {
        match self {
            Model::Lstm(p) => p.forward(window).map(|(y, c)| (y, ModelCache::Lstm(c))),
            Model::Qlstm(p) => p.forward(window).map(|(y, c)| (y, ModelCache::Qlstm(c))),
        }
    }

    fn backward(&self, cache: &ModelCache, upstream: f64) -> Result<Vec<f64>> {
        match (self, cache) {
            (Model::Lstm(p), ModelCache::Lstm(c)) => p.backward(c, upstream),
            (Model::Qlstm(p), ModelCache::Qlstm(c)) => p.backward(c, upstream),
            _ => Err(ForecastError::State(
                "cache belongs to a different model family".into(),
            )),
        }
    }
}
