use latentwalk::cli::{gradcheck_suite, gradcheck_suite_with, BATCHNORM_TOLERANCE, DENSE_TOLERANCE};
use latentwalk::nn::{
    self, gradient_check, Checkpoint, LayerGrad, LayerKind, LayerSpec, LossKind, MlpModel, Mode, OptimizerKind,
    TrainConfig, Trainer,
};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

#[test]
fn gradcheck_suite_passes_and_lists_each_kind_once() {
    let summary = gradcheck_suite(1e-6).unwrap();
    let kinds: Vec<&str> = summary.kinds.iter().map(|k| k.kind.as_str()).collect();
    assert_eq!(kinds, LayerKind::ALL.map(LayerKind::name));
    for k in &summary.kinds {
        if let Some(e) = k.plain {
            assert!(e < DENSE_TOLERANCE, "{}: {e}", k.kind);
        }
        if let Some(e) = k.with_batchnorm {
            assert!(e < BATCHNORM_TOLERANCE, "{}: {e}", k.kind);
        }
    }
    assert!(summary.check().is_ok());
}

#[test]
fn corrupted_backward_is_caught() {
    let summary = gradcheck_suite_with(1e-6, |m, cache, g| {
        let mut grads = m.backward(cache, g)?;
        for layer in &mut grads.layers {
            if let LayerGrad::Dense { weights, .. } = layer {
                *weights *= 1.01;
            }
        }
        Ok(grads)
    })
    .unwrap();
    assert!(!summary.passed());
    let err = summary.check().unwrap_err();
    assert_ne!(err.exit_code(), 0);
    assert!(err.to_string().contains("dense"));
}

#[test]
fn mapping_shaped_network_checks_in_training_mode() {
    let layers = [
        LayerSpec::dense(6, 8),
        LayerSpec::batchnorm(8),
        LayerSpec::tanh(8),
        LayerSpec::dense(8, 8),
        LayerSpec::batchnorm(8),
        LayerSpec::tanh(8),
        LayerSpec::dense(8, 4),
    ];
    let mut model = MlpModel::init(&layers, 9).unwrap();
    model.set_mode(Mode::Training);
    let report = gradient_check(
        &model,
        &random_matrix(10, 6, 1),
        &random_matrix(10, 4, 2),
        LossKind::Mse,
        1e-6,
    )
    .unwrap();
    assert!(report.max_rel_error < BATCHNORM_TOLERANCE, "{report:?}");
    assert!(report.input_rel_error < BATCHNORM_TOLERANCE);
}

#[test]
fn xor_is_learned() {
    let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
    let y = array![[0.0], [1.0], [1.0], [0.0]];
    let layers = [
        LayerSpec::dense(2, 8),
        LayerSpec::tanh(8),
        LayerSpec::dense(8, 1),
        LayerSpec::sigmoid(1),
    ];
    let config = TrainConfig {
        learning_rate: 0.05,
        batch_size: 4,
        epochs: 500,
        seed: 3,
        ..TrainConfig::default()
    };
    let out = nn::train(MlpModel::init(&layers, 3).unwrap(), &x, &y, LossKind::Bce, &config).unwrap();
    let p = out.model.predict(&x).unwrap();
    for (pi, yi) in p.iter().zip(&y) {
        assert!((pi - yi).abs() < 0.2, "{p:?}");
    }
    assert!(out.history.last().unwrap() < &out.history[0]);
}

#[test]
fn linear_regression_recovers_weights_with_sgd() {
    let x = random_matrix(200, 3, 5);
    let w = array![[1.5], [-2.0], [0.5]];
    let y = x.dot(&w) + 0.25;
    let config = TrainConfig {
        optimizer: OptimizerKind::Sgd,
        learning_rate: 0.1,
        batch_size: 20,
        epochs: 200,
        ..TrainConfig::default()
    };
    let out = nn::train(
        MlpModel::init(&[LayerSpec::dense(3, 1)], 0).unwrap(),
        &x,
        &y,
        LossKind::Mse,
        &config,
    )
    .unwrap();
    let pred = out.model.predict(&x).unwrap();
    let mse = (&pred - &y).mapv(|v| v * v).mean().unwrap();
    assert!(mse < 1e-8, "mse {mse}");
}

fn small_net() -> Vec<LayerSpec> {
    vec![
        LayerSpec::dense(4, 16),
        LayerSpec::batchnorm(16),
        LayerSpec::tanh(16),
        LayerSpec::dense(16, 2),
    ]
}

#[test]
fn same_seed_gives_identical_checkpoint_bytes() {
    let x = random_matrix(64, 4, 1);
    let y = random_matrix(64, 2, 2);
    let config = TrainConfig {
        epochs: 5,
        seed: 11,
        ..TrainConfig::default()
    };
    let run = || {
        let out = nn::train(
            MlpModel::init(&small_net(), 11).unwrap(),
            &x,
            &y,
            LossKind::Mse,
            &config,
        )
        .unwrap();
        Checkpoint::new(out.model).to_text().unwrap()
    };
    assert_eq!(run(), run());
    let other = nn::train(
        MlpModel::init(&small_net(), 12).unwrap(),
        &x,
        &y,
        LossKind::Mse,
        &TrainConfig {
            seed: 12,
            ..config.clone()
        },
    )
    .unwrap();
    assert_ne!(run(), Checkpoint::new(other.model).to_text().unwrap());
}

#[test]
fn resumed_training_matches_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let x = random_matrix(50, 4, 3);
    let y = random_matrix(50, 2, 4);
    let config = TrainConfig {
        epochs: 6,
        seed: 5,
        l2_lambda: 1e-3,
        ..TrainConfig::default()
    };
    let full = nn::train(MlpModel::init(&small_net(), 5).unwrap(), &x, &y, LossKind::Mse, &config).unwrap();

    let mut first = Trainer::new(MlpModel::init(&small_net(), 5).unwrap(), LossKind::Mse, config.clone()).unwrap();
    first.run_epochs(2, &x, &y).unwrap();
    let path = dir.path().join("half.json");
    let mut ckpt = Checkpoint::new(first.model.clone());
    ckpt.optimizer = Some(first.optimizer.clone());
    ckpt.epochs_done = Some(first.epochs_done);
    ckpt.save(&path).unwrap();

    let loaded = Checkpoint::load(&path).unwrap();
    let mut second = Trainer::resume(
        loaded.model,
        loaded.optimizer.unwrap(),
        loaded.epochs_done.unwrap(),
        LossKind::Mse,
        config.clone(),
    )
    .unwrap();
    second.run_epochs(4, &x, &y).unwrap();
    let resumed = second.finish();
    assert_eq!(
        Checkpoint::new(resumed.model).to_text().unwrap(),
        Checkpoint::new(full.model).to_text().unwrap()
    );
}

#[test]
fn resume_with_the_wrong_optimizer_is_rejected() {
    let model = MlpModel::init(&small_net(), 0).unwrap();
    let state = nn::OptimizerState::new(OptimizerKind::Sgd, &model);
    assert!(Trainer::resume(model, state, 1, LossKind::Mse, TrainConfig::default()).is_err());
}

#[test]
fn diverging_training_reports_non_finite_loss() {
    let x = random_matrix(32, 4, 1) * 1e3;
    let y = random_matrix(32, 1, 2) * 1e3;
    let config = TrainConfig {
        optimizer: OptimizerKind::Sgd,
        learning_rate: 1e3,
        epochs: 50,
        ..TrainConfig::default()
    };
    let layers = [LayerSpec::dense(4, 1)];
    let err = nn::train(MlpModel::init(&layers, 0).unwrap(), &x, &y, LossKind::Mse, &config).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}
