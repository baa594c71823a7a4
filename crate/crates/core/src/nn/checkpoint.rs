//! Model checkpoint files.
//!
//! A checkpoint is one JSON document:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "role": "mapping" | "classifier" | ... (optional),
//!   "attribute": "<name>" (optional),
//!   "mode": "training" | "inference",
//!   "specs": [{"kind": "dense", "in_dim": .., "out_dim": ..}, ...],
//!   "weights": [{"rows": .., "cols": .., "w": [row-major], "b": [..]}, ...],
//!   "batchnorm_state": [{"scale", "shift", "running_mean", "running_var"}, ...],
//!   "optimizer_state": {"kind", "step", "m", "v"} (optional),
//!   "epochs_done": .. (optional)
//! }
//! ```
//!
//! `weights` and `batchnorm_state` list the dense and batchnorm layers in
//! network order. Floats carry 17 significant digits.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::layer::LayerSpec;
use super::model::{BatchNormState, LayerParams, MlpModel, Mode};
use super::optim::OptimizerState;
use crate::error::{Error, Result};
use crate::textfmt;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct DenseRecord {
    rows: usize,
    cols: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BatchNormRecord {
    scale: Vec<f64>,
    shift: Vec<f64>,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attribute: Option<String>,
    mode: Mode,
    specs: Vec<LayerSpec>,
    weights: Vec<DenseRecord>,
    batchnorm_state: Vec<BatchNormRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optimizer_state: Option<OptimizerState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epochs_done: Option<usize>,
}

/// A model plus the optional tags and training state stored alongside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: MlpModel,
    pub role: Option<String>,
    pub attribute: Option<String>,
    pub optimizer: Option<OptimizerState>,
    pub epochs_done: Option<usize>,
}

impl Checkpoint {
    pub fn new(model: MlpModel) -> Self {
        Checkpoint {
            model,
            role: None,
            attribute: None,
            optimizer: None,
            epochs_done: None,
        }
    }

    pub fn with_role(mut self, role: &str) -> Self {
        self.role = Some(role.to_owned());
        self
    }

    pub fn with_attribute(mut self, attribute: &str) -> Self {
        self.attribute = Some(attribute.to_owned());
        self
    }

    pub fn to_text(&self) -> Result<String> {
        let mut weights = Vec::new();
        let mut batchnorm_state = Vec::new();
        for p in self.model.params() {
            match p {
                LayerParams::Dense { weights: w, bias } => weights.push(DenseRecord {
                    rows: w.nrows(),
                    cols: w.ncols(),
                    w: w.iter().copied().collect(),
                    b: bias.to_vec(),
                }),
                LayerParams::BatchNorm(s) => batchnorm_state.push(BatchNormRecord {
                    scale: s.scale.to_vec(),
                    shift: s.shift.to_vec(),
                    running_mean: s.running_mean.to_vec(),
                    running_var: s.running_var.to_vec(),
                }),
                LayerParams::Activation => {}
            }
        }
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            role: self.role.clone(),
            attribute: self.attribute.clone(),
            mode: self.model.mode(),
            specs: self.model.specs().to_vec(),
            weights,
            batchnorm_state,
            optimizer_state: self.optimizer.clone(),
            epochs_done: self.epochs_done,
        };
        let mut text = textfmt::to_string(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let value: serde_json::Value = textfmt::from_str(text, "checkpoint")?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::malformed("checkpoint", "missing format_version"))?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let file: CheckpointFile =
            serde_json::from_value(value).map_err(|e| Error::malformed("checkpoint", e.to_string()))?;

        let mut dense = file.weights.into_iter();
        let mut norms = file.batchnorm_state.into_iter();
        let mut params = Vec::with_capacity(file.specs.len());
        for (i, spec) in file.specs.iter().enumerate() {
            let p = match spec {
                LayerSpec::Dense { .. } => {
                    let rec = dense
                        .next()
                        .ok_or_else(|| Error::malformed("checkpoint", format!("layer {i}: missing weights")))?;
                    let weights = Array2::from_shape_vec((rec.rows, rec.cols), rec.w)
                        .map_err(|e| Error::malformed("checkpoint", format!("layer {i}: {e}")))?;
                    LayerParams::Dense {
                        weights,
                        bias: Array1::from(rec.b),
                    }
                }
                LayerSpec::BatchNorm { .. } => {
                    let rec = norms
                        .next()
                        .ok_or_else(|| Error::malformed("checkpoint", format!("layer {i}: missing batchnorm state")))?;
                    LayerParams::BatchNorm(BatchNormState {
                        scale: rec.scale.into(),
                        shift: rec.shift.into(),
                        running_mean: rec.running_mean.into(),
                        running_var: rec.running_var.into(),
                    })
                }
                LayerSpec::Tanh { .. } | LayerSpec::Sigmoid { .. } => LayerParams::Activation,
            };
            params.push(p);
        }
        if dense.next().is_some() || norms.next().is_some() {
            return Err(Error::malformed("checkpoint", "more parameter blocks than layers"));
        }
        let model = MlpModel::from_parts(file.specs, params, file.mode)
            .map_err(|e| Error::malformed("checkpoint", e.to_string()))?;
        if let Some(opt) = &file.optimizer_state {
            if !opt.m.is_empty() && (opt.m.len() != model.param_count() || opt.v.len() != opt.m.len()) {
                return Err(Error::malformed(
                    "checkpoint",
                    "optimizer state size does not match model",
                ));
            }
        }
        Ok(Checkpoint {
            model,
            role: file.role,
            attribute: file.attribute,
            optimizer: file.optimizer_state,
            epochs_done: file.epochs_done,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        textfmt::write_bytes(path, self.to_text()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    Checkpoint::new(model.clone()).save(path)
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    Ok(Checkpoint::load(path)?.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerSpec;

    fn model() -> MlpModel {
        MlpModel::init(
            &[
                LayerSpec::dense(3, 4),
                LayerSpec::batchnorm(4),
                LayerSpec::tanh(4),
                LayerSpec::dense(4, 1),
                LayerSpec::sigmoid(1),
            ],
            11,
        )
        .unwrap()
    }

    #[test]
    fn truncated_file_is_malformed() {
        let text = Checkpoint::new(model()).to_text().unwrap();
        let cut = &text[..text.len() / 2];
        assert!(matches!(Checkpoint::from_text(cut), Err(Error::Malformed { .. })));
    }

    #[test]
    fn wrong_version_is_reported() {
        let text =
            Checkpoint::new(model())
                .to_text()
                .unwrap()
                .replacen("\"format_version\":1", "\"format_version\":2", 1);
        assert!(matches!(
            Checkpoint::from_text(&text),
            Err(Error::Version { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn negative_running_variance_is_rejected() {
        let text = Checkpoint::new(model()).to_text().unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["batchnorm_state"][0]["running_var"][0] = serde_json::json!(-1.0);
        assert!(Checkpoint::from_text(&value.to_string()).is_err());
    }

    #[test]
    fn tags_survive() {
        let ck = Checkpoint::new(model()).with_role("classifier").with_attribute("smile");
        let back = Checkpoint::from_text(&ck.to_text().unwrap()).unwrap();
        assert_eq!(back, ck);
        assert!(ck
            .to_text()
            .unwrap()
            .contains(r#""role":"classifier","attribute":"smile""#));
    }
}
