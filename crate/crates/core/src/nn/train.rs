use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_grad, LossKind};
use super::model::{MlpModel, Mode};
use super::optim::{OptimizerKind, OptimizerState};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            l2_lambda: 0.0,
            batch_size: 32,
            epochs: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Spec("learning_rate must be positive".into()));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::Spec("l2_lambda must be >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Spec("batch_size must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Spec("epochs must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a completed training run. `history[e]` is the mean training
/// loss (data term plus L2) over the batches of epoch `e`.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub history: Vec<f64>,
}

/// Shuffled mini-batch index sets for one epoch. A trailing batch of one row
/// is merged into the previous batch so batchnorm always sees ≥ 2 rows.
pub fn epoch_batches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    order.shuffle(&mut rng);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let last = batches.pop().expect("len > 1");
        batches.last_mut().expect("len > 1").extend(last);
    }
    batches
}

/// Seeded 90/10 split of `0..n` into sorted (train, held-out) indices.
pub fn holdout_split(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // stream 0.. is used by epoch shuffling
    rng.set_stream(u64::MAX);
    order.shuffle(&mut rng);
    let heldout = n.div_ceil(10);
    let mut train = order.split_off(heldout);
    let mut held = order;
    train.sort_unstable();
    held.sort_unstable();
    (train, held)
}

/// Resumable training loop; everything it needs to continue lives in the
/// model, the optimizer state and the number of finished epochs.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub model: MlpModel,
    pub optimizer: OptimizerState,
    pub epochs_done: usize,
    pub history: Vec<f64>,
    config: TrainConfig,
    kind: LossKind,
}

impl Trainer {
    pub fn new(model: MlpModel, kind: LossKind, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let optimizer = OptimizerState::new(config.optimizer, &model);
        Ok(Trainer {
            model,
            optimizer,
            epochs_done: 0,
            history: Vec::new(),
            config,
            kind,
        })
    }

    /// Continues from a saved model and optimizer state.
    pub fn resume(
        model: MlpModel,
        optimizer: OptimizerState,
        epochs_done: usize,
        kind: LossKind,
        config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if optimizer.kind != config.optimizer {
            return Err(Error::Invalid("optimizer state does not match config".into()));
        }
        Ok(Trainer {
            model,
            optimizer,
            epochs_done,
            history: Vec::new(),
            config,
            kind,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn run_epochs(&mut self, count: usize, inputs: &Array2<f64>, targets: &Array2<f64>) -> Result<()> {
        check_dataset(&self.model, inputs, targets)?;
        self.model.set_mode(Mode::Training);
        for _ in 0..count {
            let epoch = self.epochs_done;
            let batches = epoch_batches(inputs.nrows(), self.config.batch_size, self.config.seed, epoch);
            let mut total = 0.0;
            for (b, idx) in batches.iter().enumerate() {
                let x = inputs.select(Axis(0), idx);
                let y = targets.select(Axis(0), idx);
                let (pred, cache) = self.model.forward(&x)?;
                let (loss, grad) = loss_and_grad(self.kind, &pred, &y, &self.model, self.config.l2_lambda)?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite {
                        epoch,
                        batch: b,
                        what: format!("loss = {loss}"),
                    });
                }
                let grads = self.model.backward(&cache, &grad)?;
                self.model.update_running_stats(&cache)?;
                self.optimizer.step(
                    &mut self.model,
                    &grads,
                    self.config.learning_rate,
                    self.config.l2_lambda,
                )?;
                total += loss * idx.len() as f64;
            }
            self.history.push(total / inputs.nrows() as f64);
            self.epochs_done += 1;
        }
        self.model.set_mode(Mode::Inference);
        Ok(())
    }

    pub fn finish(self) -> TrainOutcome {
        let mut model = self.model;
        model.set_mode(Mode::Inference);
        TrainOutcome {
            model,
            history: self.history,
        }
    }
}

fn check_dataset(model: &MlpModel, inputs: &Array2<f64>, targets: &Array2<f64>) -> Result<()> {
    if inputs.nrows() == 0 {
        return Err(Error::Invalid("training set is empty".into()));
    }
    if inputs.nrows() != targets.nrows() {
        return Err(Error::Shape(format!(
            "{} inputs but {} targets",
            inputs.nrows(),
            targets.nrows()
        )));
    }
    if inputs.ncols() != model.in_dim() || targets.ncols() != model.out_dim() {
        return Err(Error::Shape(format!(
            "dataset is {}→{} but model is {}→{}",
            inputs.ncols(),
            targets.ncols(),
            model.in_dim(),
            model.out_dim()
        )));
    }
    if model.has_batchnorm() && inputs.nrows() < 2 {
        return Err(Error::Invalid("batchnorm training needs at least 2 rows".into()));
    }
    Ok(())
}

/// Trains `model` for `config.epochs` epochs and returns it in inference mode.
pub fn train(
    model: MlpModel,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    kind: LossKind,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(model, kind, config.clone())?;
    trainer.run_epochs(config.epochs, inputs, targets)?;
    Ok(trainer.finish())
}
