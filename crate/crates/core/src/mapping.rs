//! The bridge from the sphere latent space to the decoder's latent space.

use std::path::Path;

use ndarray::{Array1, Array2, Axis};

use crate::classifier::stack;
use crate::error::{Error, Result};
use crate::nn::{self, Checkpoint, LayerSpec, LossKind, MlpModel, Mode, OptimizerKind, TrainConfig};
use crate::sphere::{LatentVector, UNIT_TOLERANCE};

pub const ROLE: &str = "mapping";
pub const MIN_PAIRS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct MappingSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub hidden: Vec<usize>,
}

impl Default for MappingSpec {
    fn default() -> Self {
        MappingSpec {
            in_dim: 128,
            out_dim: 64,
            hidden: vec![256; 4],
        }
    }
}

impl MappingSpec {
    /// `[dense, batchnorm, tanh]` per hidden width, then a linear dense
    /// output layer.
    pub fn layers(&self) -> Result<Vec<LayerSpec>> {
        if self.in_dim == 0 || self.out_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Spec("mapping dimensions must be positive".into()));
        }
        let mut layers = Vec::with_capacity(3 * self.hidden.len() + 1);
        let mut prev = self.in_dim;
        for &h in &self.hidden {
            layers.push(LayerSpec::dense(prev, h));
            layers.push(LayerSpec::batchnorm(h));
            layers.push(LayerSpec::tanh(h));
            prev = h;
        }
        layers.push(LayerSpec::dense(prev, self.out_dim));
        Ok(layers)
    }
}

pub fn default_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        optimizer: OptimizerKind::Adam,
        learning_rate: 3e-4,
        l2_lambda: 1e-4,
        batch_size: 32,
        epochs: 100,
        seed,
    }
}

#[derive(Clone, Debug)]
pub struct TrainedMapping {
    pub model: MlpModel,
    /// Mean squared error per output component on the training split.
    pub train_mse: f64,
    pub heldout_mse: f64,
    pub history: Vec<f64>,
}

fn check_pairs(pairs: &[(LatentVector, Array1<f64>)], spec: &MappingSpec) -> Result<()> {
    if pairs.len() < MIN_PAIRS {
        return Err(Error::Invalid(format!(
            "mapping training needs at least {MIN_PAIRS} pairs, got {}",
            pairs.len()
        )));
    }
    for (i, (z, z2)) in pairs.iter().enumerate() {
        if z.dim() != spec.in_dim || z2.len() != spec.out_dim {
            return Err(Error::Shape(format!(
                "pair {i} is {}→{}, mapping is {}→{}",
                z.dim(),
                z2.len(),
                spec.in_dim,
                spec.out_dim
            )));
        }
        if (z.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Invalid(format!("pair {i}: z has norm {}", z.norm())));
        }
    }
    Ok(())
}

/// Mean squared error per output component.
pub fn mse(model: &MlpModel, x: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
    let (loss, _) = nn::data_loss(LossKind::Mse, &model.predict(x)?, y)?;
    Ok(loss / y.ncols() as f64)
}

/// Trains F on a seeded 90/10 split with MSE plus L2.
pub fn train_mapping(
    pairs: &[(LatentVector, Array1<f64>)],
    spec: &MappingSpec,
    config: &TrainConfig,
) -> Result<TrainedMapping> {
    let layers = spec.layers()?;
    check_pairs(pairs, spec)?;
    let x = stack(&pairs.iter().map(|(z, _)| z.clone()).collect::<Vec<_>>());
    let mut y = Array2::zeros((pairs.len(), spec.out_dim));
    for (mut row, (_, z2)) in y.rows_mut().into_iter().zip(pairs) {
        row.assign(z2);
    }
    let (train_idx, held_idx) = nn::holdout_split(pairs.len(), config.seed);
    let (x_train, y_train) = (x.select(Axis(0), &train_idx), y.select(Axis(0), &train_idx));
    let (x_held, y_held) = (x.select(Axis(0), &held_idx), y.select(Axis(0), &held_idx));

    let model = MlpModel::init(&layers, config.seed)?;
    let outcome = nn::train(model, &x_train, &y_train, LossKind::Mse, config)?;
    Ok(TrainedMapping {
        train_mse: mse(&outcome.model, &x_train, &y_train)?,
        heldout_mse: mse(&outcome.model, &x_held, &y_held)?,
        model: outcome.model,
        history: outcome.history,
    })
}

fn check_model(model: &MlpModel, dim: usize) -> Result<()> {
    if model.mode() != Mode::Inference {
        return Err(Error::Invalid("mapping must be in inference mode".into()));
    }
    if model.in_dim() != dim {
        return Err(Error::Shape(format!(
            "latent has dimension {dim}, mapping expects {}",
            model.in_dim()
        )));
    }
    Ok(())
}

/// F(z). The result is not normalized.
pub fn map_latent(model: &MlpModel, z: &LatentVector) -> Result<Array1<f64>> {
    check_model(model, z.dim())?;
    let x = z.view().insert_axis(Axis(0)).to_owned();
    Ok(model.predict(&x)?.row(0).to_owned())
}

/// F applied row by row; identical to calling [`map_latent`] per item.
pub fn map_batch(model: &MlpModel, zs: &[LatentVector]) -> Result<Array2<f64>> {
    let Some(first) = zs.first() else {
        return Ok(Array2::zeros((0, model.out_dim())));
    };
    check_model(model, first.dim())?;
    model.predict(&stack(zs))
}

pub fn save_mapping(model: &MlpModel, path: &Path) -> Result<()> {
    Checkpoint::new(model.clone()).with_role(ROLE).save(path)
}

pub fn load_mapping(path: &Path) -> Result<MlpModel> {
    let ckpt = Checkpoint::load(path)?;
    match ckpt.role.as_deref() {
        Some(ROLE) => Ok(ckpt.model),
        other => Err(Error::malformed(
            "mapping checkpoint",
            format!("{}: role is {other:?}, expected {ROLE:?}", path.display()),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_has_five_dense_layers() {
        let layers = MappingSpec::default().layers().unwrap();
        let dense = layers.iter().filter(|l| l.kind() == nn::LayerKind::Dense).count();
        assert_eq!(dense, 5);
        assert_eq!(layers.last().unwrap().out_dim(), 64);
        assert_eq!(layers.last().unwrap().kind(), nn::LayerKind::Dense);
    }

    #[test]
    fn too_few_pairs_is_rejected() {
        let pairs = vec![(LatentVector::basis(128, 0), Array1::zeros(64)); 10];
        assert!(train_mapping(&pairs, &MappingSpec::default(), &default_train_config(0)).is_err());
    }
}
