//! Versioned JSON model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qlstm_forecast::dataset::Scaler;
use qlstm_forecast::lstm::LstmParams;
use qlstm_forecast::qlstm::QlstmParams;
use qlstm_forecast::training::TrainConfig;
use qlstm_forecast::vqc::{Encoding, VqcDescriptor};
use qlstm_forecast::{Model, ModelKind, NamedArray, Parameterized};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub input: usize,
    pub hidden: usize,
    pub lookback: usize,
    /// Quantum register; `None` for the classical model.
    pub n_qubits: Option<usize>,
    pub n_layers: Option<usize>,
    pub encoding: Option<Encoding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub hyperparameters: Hyperparameters,
    pub scaler: Scaler,
    pub parameters: Vec<NamedArray>,
    pub train_config: TrainConfig,
    pub seed: u64,
}

impl ModelFile {
    pub fn new(
        model: &Model,
        lookback: usize,
        scaler: Scaler,
        train_config: TrainConfig,
        seed: u64,
    ) -> Self {
        let hyperparameters = match model {
            Model::Lstm(p) => Hyperparameters {
                input: p.input(),
                hidden: p.hidden(),
                lookback,
                n_qubits: None,
                n_layers: None,
                encoding: None,
            },
            Model::Qlstm(p) => Hyperparameters {
                input: p.input(),
                hidden: p.hidden(),
                lookback,
                n_qubits: Some(p.descriptor.n_qubits),
                n_layers: Some(p.descriptor.n_layers),
                encoding: Some(p.descriptor.encoding),
            },
        };
        ModelFile {
            format_version: FORMAT_VERSION,
            model_kind: model.kind(),
            hyperparameters,
            scaler,
            parameters: model.named_arrays(),
            train_config,
            seed,
        }
    }

    /// Rebuilds the parameter struct described by this file.
    pub fn model(&self) -> CliResult<Model> {
        let h = &self.hyperparameters;
        let incompatible = |msg: String| CliError::Compatibility(msg);
        let mut model = match self.model_kind {
            ModelKind::Lstm => Model::Lstm(LstmParams::zeros(h.input, h.hidden)),
            ModelKind::Qlstm => {
                let (Some(nq), Some(nl)) = (h.n_qubits, h.n_layers) else {
                    return Err(incompatible(
                        "qlstm model file lacks n_qubits/n_layers".into(),
                    ));
                };
                let d = VqcDescriptor::new(nq, nl, h.encoding.unwrap_or_default())
                    .map_err(|e| incompatible(e.to_string()))?;
                Model::Qlstm(QlstmParams::zeros(d, h.input, h.hidden))
            }
        };
        model
            .load_named(&self.parameters)
            .map_err(|e| incompatible(e.to_string()))?;
        if self.scaler.features.len() != h.input {
            return Err(incompatible(format!(
                "scaler covers {} features, model expects {}",
                self.scaler.features.len(),
                h.input
            )));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Runtime(format!("serializing model file: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        // Check the version before the full schema so an old or future file
        // is reported as such rather than as a parse failure.
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Compatibility(format!("unreadable model file: {e}")))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(CliError::Compatibility(format!(
                    "model file format version {v}, this build reads version {FORMAT_VERSION}"
                )))
            }
            None => {
                return Err(CliError::Compatibility(
                    "model file has no format_version".into(),
                ))
            }
        }
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| CliError::Compatibility(format!("malformed model file: {e}")))?;
        file.model()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json()?)
            .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
