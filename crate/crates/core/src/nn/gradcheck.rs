//! Central finite-difference checks of backpropagated gradients.

use std::collections::BTreeMap;

use ndarray::Array2;

use super::layer::LayerKind;
use super::loss::{data_loss, LossKind};
use super::model::{ForwardCache, Gradients, LayerGrad, LayerParams, MlpModel};
use crate::error::Result;

/// Gradients smaller than this are compared in absolute rather than relative
/// terms; central differences at ε=1e-6 carry roughly 1e-10 of roundoff.
pub const RELATIVE_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / scale
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Worst relative error over every parameter and every layer input.
    pub max_rel_error: f64,
    /// Worst error attributed to each layer kind present in the model: its
    /// parameters (dense, batchnorm) and the gradient reaching its input.
    pub by_kind: BTreeMap<LayerKind, f64>,
    /// Worst error on ∂loss/∂batch.
    pub input_rel_error: f64,
    pub entries_checked: usize,
}

/// Compares `model.backward` against central differences of the data loss.
pub fn gradient_check(
    model: &MlpModel,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    kind: LossKind,
    eps: f64,
) -> Result<GradCheckReport> {
    gradient_check_with(model, inputs, targets, kind, eps, |m, cache, g| m.backward(cache, g))
}

/// Same as [`gradient_check`] with a caller-supplied backward pass, so a
/// deliberately broken implementation can be shown to fail.
pub fn gradient_check_with<B>(
    model: &MlpModel,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    kind: LossKind,
    eps: f64,
    backward: B,
) -> Result<GradCheckReport>
where
    B: Fn(&MlpModel, &ForwardCache, &Array2<f64>) -> Result<Gradients>,
{
    let (pred, cache) = model.forward(inputs)?;
    let (_, grad_pred) = data_loss(kind, &pred, targets)?;
    let grads = backward(model, &cache, &grad_pred)?;

    let mut by_kind: BTreeMap<LayerKind, f64> = BTreeMap::new();
    let mut entries = 0usize;
    let mut note = |kind: LayerKind, err: f64| {
        let slot = by_kind.entry(kind).or_insert(0.0);
        *slot = slot.max(err);
    };

    // Parameters.
    let mut probe = model.clone();
    let loss_of = |m: &MlpModel| -> Result<f64> {
        let out = m.predict(inputs)?;
        Ok(data_loss(kind, &out, targets)?.0)
    };
    for (layer, grad) in grads.layers.iter().enumerate() {
        let layer_kind = model.specs()[layer].kind();
        let analytic: Vec<f64> = match grad {
            LayerGrad::Dense { weights, bias } => weights.iter().chain(bias.iter()).copied().collect(),
            LayerGrad::BatchNorm { scale, shift } => scale.iter().chain(shift.iter()).copied().collect(),
            LayerGrad::None => continue,
        };
        for (k, &a) in analytic.iter().enumerate() {
            let original = param_slot(&mut probe, layer, k);
            *param_slot_mut(&mut probe, layer, k) = original + eps;
            let plus = loss_of(&probe)?;
            *param_slot_mut(&mut probe, layer, k) = original - eps;
            let minus = loss_of(&probe)?;
            *param_slot_mut(&mut probe, layer, k) = original;
            let numeric = (plus - minus) / (2.0 * eps);
            note(layer_kind, relative_error(a, numeric));
            entries += 1;
        }
    }

    // Gradient arriving at each layer's input; entry 0 is the batch itself.
    let mut input_rel_error: f64 = 0.0;
    for layer in 0..model.specs().len() {
        let layer_kind = model.specs()[layer].kind();
        let x = cache.activation(layer);
        let analytic = &grads.layer_inputs[layer];
        let mut perturbed = x.clone();
        for ((r, c), &a) in analytic.indexed_iter() {
            let original = x[[r, c]];
            perturbed[[r, c]] = original + eps;
            let plus = data_loss(kind, &model.forward_from(layer, &perturbed)?.0, targets)?.0;
            perturbed[[r, c]] = original - eps;
            let minus = data_loss(kind, &model.forward_from(layer, &perturbed)?.0, targets)?.0;
            perturbed[[r, c]] = original;
            let err = relative_error(a, (plus - minus) / (2.0 * eps));
            note(layer_kind, err);
            if layer == 0 {
                input_rel_error = input_rel_error.max(err);
            }
            entries += 1;
        }
    }

    let max_rel_error = by_kind.values().copied().fold(0.0, f64::max);
    Ok(GradCheckReport {
        max_rel_error,
        by_kind,
        input_rel_error,
        entries_checked: entries,
    })
}

fn param_slot(model: &mut MlpModel, layer: usize, k: usize) -> f64 {
    *param_slot_mut(model, layer, k)
}

fn param_slot_mut(model: &mut MlpModel, layer: usize, k: usize) -> &mut f64 {
    match &mut model.params_mut()[layer] {
        LayerParams::Dense { weights, bias } => {
            let nw = weights.len();
            if k < nw {
                &mut weights.as_slice_mut().expect("standard layout")[k]
            } else {
                &mut bias[k - nw]
            }
        }
        LayerParams::BatchNorm(state) => {
            let ns = state.scale.len();
            if k < ns {
                &mut state.scale[k]
            } else {
                &mut state.shift[k - ns]
            }
        }
        LayerParams::Activation => unreachable!("activations have no parameters"),
    }
}
