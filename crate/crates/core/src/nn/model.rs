use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, Axis};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::{validate_specs, LayerKind, LayerSpec};
use crate::error::{Error, Result};

static GENERATION: AtomicU64 = AtomicU64::new(1);

fn next_generation() -> u64 {
    GENERATION.fetch_add(1, Ordering::Relaxed)
}

/// Whether batchnorm layers normalize with batch statistics or the running
/// estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Training,
    Inference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormState {
    pub scale: Array1<f64>,
    pub shift: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerParams {
    /// `weights` is `out_dim × in_dim`; a row of the batch maps to `W x + b`.
    Dense {
        weights: Array2<f64>,
        bias: Array1<f64>,
    },
    BatchNorm(BatchNormState),
    Activation,
}

/// A feedforward network: layer specs plus their parameters.
#[derive(Clone, Debug)]
pub struct MlpModel {
    specs: Vec<LayerSpec>,
    params: Vec<LayerParams>,
    mode: Mode,
    // Changes whenever parameters change; caches remember the value they were
    // produced under.
    generation: u64,
}

impl PartialEq for MlpModel {
    fn eq(&self, other: &Self) -> bool {
        self.specs == other.specs && self.params == other.params && self.mode == other.mode
    }
}

/// Everything `backward` needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    generation: u64,
    mode: Mode,
    /// `activations[i]` is the input of layer `i`; the last entry is the output.
    activations: Vec<Array2<f64>>,
    batchnorm: Vec<Option<BatchNormCache>>,
}

#[derive(Clone, Debug)]
struct BatchNormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
    batch_mean: Array1<f64>,
    batch_var: Array1<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache always holds the input")
    }

    /// Input of layer `i` (or the output, for `i == depth`).
    pub fn activation(&self, i: usize) -> &Array2<f64> {
        &self.activations[i]
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerGrad {
    Dense { weights: Array2<f64>, bias: Array1<f64> },
    BatchNorm { scale: Array1<f64>, shift: Array1<f64> },
    None,
}

/// Parameter gradients plus the gradient with respect to every layer input.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    /// `layer_inputs[i]` is ∂loss/∂(input of layer i); entry 0 is the
    /// gradient with respect to the batch itself.
    pub layer_inputs: Vec<Array2<f64>>,
}

impl Gradients {
    pub fn input(&self) -> &Array2<f64> {
        &self.layer_inputs[0]
    }
}

impl MlpModel {
    /// Xavier-uniform dense weights, zero biases, identity batchnorm.
    pub fn init(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        validate_specs(specs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = specs
            .iter()
            .map(|spec| match *spec {
                LayerSpec::Dense { in_dim, out_dim } => {
                    let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
                    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                    let weights = Array2::from_shape_simple_fn((out_dim, in_dim), || dist.sample(&mut rng));
                    LayerParams::Dense {
                        weights,
                        bias: Array1::zeros(out_dim),
                    }
                }
                LayerSpec::BatchNorm { dim, .. } => LayerParams::BatchNorm(BatchNormState {
                    scale: Array1::ones(dim),
                    shift: Array1::zeros(dim),
                    running_mean: Array1::zeros(dim),
                    running_var: Array1::ones(dim),
                }),
                LayerSpec::Tanh { .. } | LayerSpec::Sigmoid { .. } => LayerParams::Activation,
            })
            .collect();
        Ok(MlpModel {
            specs: specs.to_vec(),
            params,
            mode: Mode::Inference,
            generation: next_generation(),
        })
    }

    /// Assembles a model from explicit parameters, validating every shape.
    pub fn from_parts(specs: Vec<LayerSpec>, params: Vec<LayerParams>, mode: Mode) -> Result<Self> {
        validate_specs(&specs)?;
        if specs.len() != params.len() {
            return Err(Error::Shape(format!(
                "{} layer specs but {} parameter blocks",
                specs.len(),
                params.len()
            )));
        }
        for (i, (spec, p)) in specs.iter().zip(&params).enumerate() {
            match (spec, p) {
                (LayerSpec::Dense { in_dim, out_dim }, LayerParams::Dense { weights, bias }) => {
                    if weights.dim() != (*out_dim, *in_dim) || bias.len() != *out_dim {
                        return Err(Error::Shape(format!(
                            "layer {i}: dense weights {:?}/bias {} do not match {}→{}",
                            weights.dim(),
                            bias.len(),
                            in_dim,
                            out_dim
                        )));
                    }
                }
                (LayerSpec::BatchNorm { dim, .. }, LayerParams::BatchNorm(bn)) => {
                    let lens = [
                        bn.scale.len(),
                        bn.shift.len(),
                        bn.running_mean.len(),
                        bn.running_var.len(),
                    ];
                    if lens.iter().any(|&l| l != *dim) {
                        return Err(Error::Shape(format!(
                            "layer {i}: batchnorm state lengths {lens:?} do not match {dim}"
                        )));
                    }
                    if bn.running_var.iter().any(|&v| !(v >= 0.0)) {
                        return Err(Error::Invalid(format!(
                            "layer {i}: running variance must be non-negative"
                        )));
                    }
                }
                (LayerSpec::Tanh { .. } | LayerSpec::Sigmoid { .. }, LayerParams::Activation) => {}
                _ => {
                    return Err(Error::Shape(format!(
                        "layer {i}: parameters do not match layer kind {}",
                        spec.kind()
                    )))
                }
            }
        }
        Ok(MlpModel {
            specs,
            params,
            mode,
            generation: next_generation(),
        })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &[LayerParams] {
        &self.params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn in_dim(&self) -> usize {
        self.specs[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.specs.last().expect("validated non-empty").out_dim()
    }

    pub fn has_batchnorm(&self) -> bool {
        self.specs.iter().any(|s| s.kind() == LayerKind::BatchNorm)
    }

    pub fn param_count(&self) -> usize {
        self.params
            .iter()
            .map(|p| match p {
                LayerParams::Dense { weights, bias } => weights.len() + bias.len(),
                LayerParams::BatchNorm(bn) => bn.scale.len() + bn.shift.len(),
                LayerParams::Activation => 0,
            })
            .sum()
    }

    /// Σ‖W‖² over dense weight matrices (biases excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        self.params
            .iter()
            .map(|p| match p {
                LayerParams::Dense { weights, .. } => weights.iter().map(|w| w * w).sum(),
                _ => 0.0,
            })
            .sum()
    }

    /// Mutable access to the trainable parameters; invalidates outstanding
    /// caches.
    pub fn params_mut(&mut self) -> &mut [LayerParams] {
        self.generation = next_generation();
        &mut self.params
    }

    /// Copy of layers `range` as a standalone model (e.g. the encoder half
    /// of an autoencoder).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<MlpModel> {
        if range.start >= range.end || range.end > self.specs.len() {
            return Err(Error::Spec(format!(
                "layer range {range:?} is not within 0..{}",
                self.specs.len()
            )));
        }
        MlpModel::from_parts(
            self.specs[range.clone()].to_vec(),
            self.params[range].to_vec(),
            self.mode,
        )
    }

    pub fn forward(&self, batch: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.forward_from(0, batch)
    }

    /// Forward pass without keeping the cache.
    pub fn predict(&self, batch: &Array2<f64>) -> Result<Array2<f64>> {
        self.forward(batch).map(|(out, _)| out)
    }

    /// Runs layers `start..` on `batch`, which must be shaped like the input
    /// of layer `start`. The cache then covers only those layers.
    pub fn forward_from(&self, start: usize, batch: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        let Some(first) = self.specs.get(start) else {
            return Err(Error::Shape(format!("no layer {start}")));
        };
        if batch.ncols() != first.in_dim() {
            return Err(Error::Shape(format!(
                "batch has {} columns, layer {} expects {}",
                batch.ncols(),
                start,
                first.in_dim()
            )));
        }
        let n = batch.nrows();
        if n == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        if self.mode == Mode::Training && n < 2 && self.specs[start..].iter().any(|s| s.kind() == LayerKind::BatchNorm)
        {
            return Err(Error::Invalid(
                "batchnorm in training mode needs a batch of at least 2 rows".into(),
            ));
        }

        let mut activations = Vec::with_capacity(self.specs.len() - start + 1);
        let mut batchnorm = Vec::with_capacity(self.specs.len() - start);
        activations.push(batch.clone());
        for (spec, params) in self.specs[start..].iter().zip(&self.params[start..]) {
            let x = activations.last().expect("non-empty");
            let (y, bn_cache) = match (spec, params) {
                (LayerSpec::Dense { .. }, LayerParams::Dense { weights, bias }) => (x.dot(&weights.t()) + bias, None),
                (LayerSpec::BatchNorm { epsilon, .. }, LayerParams::BatchNorm(state)) => {
                    let (mean, var) = match self.mode {
                        Mode::Training => {
                            let mean = x.mean_axis(Axis(0)).expect("n >= 2");
                            let centered = x - &mean;
                            let var = centered.mapv(|c| c * c).mean_axis(Axis(0)).expect("n >= 2");
                            (mean, var)
                        }
                        Mode::Inference => (state.running_mean.clone(), state.running_var.clone()),
                    };
                    let inv_std = var.mapv(|v| 1.0 / (v + epsilon).sqrt());
                    let normalized = (x - &mean) * &inv_std;
                    let y = &normalized * &state.scale + &state.shift;
                    (
                        y,
                        Some(BatchNormCache {
                            normalized,
                            inv_std,
                            batch_mean: mean,
                            batch_var: var,
                        }),
                    )
                }
                (LayerSpec::Tanh { .. }, _) => (x.mapv(f64::tanh), None),
                (LayerSpec::Sigmoid { .. }, _) => (x.mapv(sigmoid), None),
                _ => unreachable!("params validated against specs"),
            };
            activations.push(y);
            batchnorm.push(bn_cache);
        }
        let out = activations.last().expect("non-empty").clone();
        Ok((
            out,
            ForwardCache {
                generation: self.generation,
                mode: self.mode,
                activations,
                batchnorm,
            },
        ))
    }

    /// Exact backpropagation of `grad_out` (∂loss/∂output) through the cached
    /// forward pass.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Array2<f64>) -> Result<Gradients> {
        let depth = cache.activations.len() - 1;
        if cache.generation != self.generation || cache.mode != self.mode {
            return Err(Error::StaleCache(
                "parameters or mode changed since the forward pass".into(),
            ));
        }
        if depth != self.specs.len() {
            return Err(Error::StaleCache(format!(
                "cache covers {depth} layers, model has {}",
                self.specs.len()
            )));
        }
        self.backward_range(0, cache, grad_out)
    }

    fn backward_range(&self, start: usize, cache: &ForwardCache, grad_out: &Array2<f64>) -> Result<Gradients> {
        let out = cache.output();
        if grad_out.dim() != out.dim() {
            return Err(Error::Shape(format!(
                "output gradient {:?} does not match output {:?}",
                grad_out.dim(),
                out.dim()
            )));
        }
        let n_layers = self.specs.len() - start;
        let mut layer_grads = vec![LayerGrad::None; n_layers];
        let mut input_grads = vec![Array2::zeros((0, 0)); n_layers + 1];
        let mut grad = grad_out.clone();
        input_grads[n_layers] = grad.clone();

        for local in (0..n_layers).rev() {
            let idx = start + local;
            let x = &cache.activations[local];
            let y = &cache.activations[local + 1];
            let (gx, lg) = match (&self.specs[idx], &self.params[idx]) {
                (LayerSpec::Dense { .. }, LayerParams::Dense { weights, .. }) => {
                    let gw = grad.t().dot(x);
                    let gb = grad.sum_axis(Axis(0));
                    (grad.dot(weights), LayerGrad::Dense { weights: gw, bias: gb })
                }
                (LayerSpec::BatchNorm { .. }, LayerParams::BatchNorm(state)) => {
                    let bn = cache.batchnorm[local]
                        .as_ref()
                        .ok_or_else(|| Error::StaleCache("missing batchnorm cache".into()))?;
                    let g_scale = (&grad * &bn.normalized).sum_axis(Axis(0));
                    let g_shift = grad.sum_axis(Axis(0));
                    let g_norm = &grad * &state.scale;
                    let gx = match cache.mode {
                        Mode::Inference => g_norm * &bn.inv_std,
                        Mode::Training => {
                            // Batch statistics depend on every row, so the
                            // gradient couples rows through the mean and variance.
                            let n = x.nrows() as f64;
                            let sum_g = g_norm.sum_axis(Axis(0));
                            let sum_gx = (&g_norm * &bn.normalized).sum_axis(Axis(0));
                            let inner = g_norm * n - &sum_g - &bn.normalized * &sum_gx;
                            inner * &(&bn.inv_std / n)
                        }
                    };
                    (
                        gx,
                        LayerGrad::BatchNorm {
                            scale: g_scale,
                            shift: g_shift,
                        },
                    )
                }
                (LayerSpec::Tanh { .. }, _) => (&grad * &y.mapv(|t| 1.0 - t * t), LayerGrad::None),
                (LayerSpec::Sigmoid { .. }, _) => (&grad * &y.mapv(|s| s * (1.0 - s)), LayerGrad::None),
                _ => unreachable!("params validated against specs"),
            };
            layer_grads[local] = lg;
            grad = gx;
            input_grads[local] = grad.clone();
        }
        Ok(Gradients {
            layers: layer_grads,
            layer_inputs: input_grads,
        })
    }

    /// Folds the batch statistics of a training-mode pass into the running
    /// estimates (unbiased variance).
    pub fn update_running_stats(&mut self, cache: &ForwardCache) -> Result<()> {
        if cache.mode != Mode::Training {
            return Ok(());
        }
        if cache.activations.len() - 1 != self.specs.len() {
            return Err(Error::StaleCache("cache does not cover the whole model".into()));
        }
        let n = cache.batch_size() as f64;
        for ((spec, params), bn) in self.specs.iter().zip(&mut self.params).zip(&cache.batchnorm) {
            if let (LayerSpec::BatchNorm { momentum, .. }, LayerParams::BatchNorm(state), Some(bn)) = (spec, params, bn)
            {
                let m = *momentum;
                let unbiased = &bn.batch_var * (n / (n - 1.0));
                state.running_mean = &state.running_mean * m + &bn.batch_mean * (1.0 - m);
                state.running_var = &state.running_var * m + unbiased * (1.0 - m);
            }
        }
        // Running statistics only affect inference-mode passes, but any cache
        // taken before this point no longer describes the model.
        self.generation = next_generation();
        Ok(())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
