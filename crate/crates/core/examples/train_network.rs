//! Trains a small network on XOR, saves it, and reloads it.

use latentwalk::nn::{self, Checkpoint, LayerSpec, LossKind, MlpModel, TrainConfig};
use ndarray::array;

fn main() -> latentwalk::Result<()> {
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
    let out = nn::train(MlpModel::init(&layers, 3)?, &x, &y, LossKind::Bce, &config)?;
    println!(
        "loss {:.4} -> {:.4}",
        out.history[0],
        out.history[out.history.len() - 1]
    );

    let path = std::env::temp_dir().join("latentwalk-xor.json");
    Checkpoint::new(out.model).save(&path)?;
    let model = Checkpoint::load(&path)?.model;
    for (row, p) in x.rows().into_iter().zip(model.predict(&x)?.iter()) {
        println!("{row} -> {p:.3}");
    }
    println!("checkpoint at {}", path.display());
    Ok(())
}
