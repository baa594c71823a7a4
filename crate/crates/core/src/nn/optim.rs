use serde::{Deserialize, Serialize};

use super::model::{Gradients, LayerGrad, LayerParams, MlpModel};
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optimizer moments, flattened in parameter order: for each layer, dense
/// weights (row-major) then bias, or batchnorm scale then shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub step: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, model: &MlpModel) -> Self {
        let n = match kind {
            OptimizerKind::Sgd => 0,
            OptimizerKind::Adam => model.param_count(),
        };
        OptimizerState {
            kind,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// One update. Weight decay adds `2·l2_lambda·W` to dense weight
    /// gradients only.
    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients, learning_rate: f64, l2_lambda: f64) -> Result<()> {
        if grads.layers.len() != model.specs().len() {
            return Err(Error::Shape("gradients do not cover the model".into()));
        }
        if self.kind == OptimizerKind::Adam && self.m.len() != model.param_count() {
            return Err(Error::Shape(format!(
                "optimizer holds {} moments for {} parameters",
                self.m.len(),
                model.param_count()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - ADAM_BETA1.powi(t);
        let bias2 = 1.0 - ADAM_BETA2.powi(t);
        let mut offset = 0usize;
        let kind = self.kind;
        let (m, v) = (&mut self.m, &mut self.v);

        let mut update = |params: &mut [f64], grad: &[f64], decay: f64| {
            for (i, (p, &g)) in params.iter_mut().zip(grad).enumerate() {
                let g = g + 2.0 * decay * *p;
                match kind {
                    OptimizerKind::Sgd => *p -= learning_rate * g,
                    OptimizerKind::Adam => {
                        let k = offset + i;
                        m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * g;
                        v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * g * g;
                        let m_hat = m[k] / bias1;
                        let v_hat = v[k] / bias2;
                        *p -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                    }
                }
            }
            offset += params.len();
        };

        for (params, grad) in model.params_mut().iter_mut().zip(&grads.layers) {
            match (params, grad) {
                (LayerParams::Dense { weights, bias }, LayerGrad::Dense { weights: gw, bias: gb }) => {
                    update(
                        weights.as_slice_mut().expect("standard layout"),
                        gw.as_standard_layout().as_slice().expect("standard layout"),
                        l2_lambda,
                    );
                    update(
                        bias.as_slice_mut().expect("contiguous"),
                        gb.as_slice().expect("contiguous"),
                        0.0,
                    );
                }
                (LayerParams::BatchNorm(state), LayerGrad::BatchNorm { scale, shift }) => {
                    update(
                        state.scale.as_slice_mut().expect("contiguous"),
                        scale.as_slice().expect("contiguous"),
                        0.0,
                    );
                    update(
                        state.shift.as_slice_mut().expect("contiguous"),
                        shift.as_slice().expect("contiguous"),
                        0.0,
                    );
                }
                (LayerParams::Activation, LayerGrad::None) => {}
                _ => return Err(Error::Shape("gradient kind does not match layer".into())),
            }
        }
        Ok(())
    }
}
