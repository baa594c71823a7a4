//! Trains a classifier on synthetic unit vectors and walks one of them
//! across the decision boundary and back again.

use latentwalk::classifier::{self, train_classifier, ClassifierSpec, EmbeddingDataset};
use latentwalk::sphere::geodesic_distance;
use latentwalk::walk::{semantic_walk, WalkConfig};
use latentwalk::LatentVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> latentwalk::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vectors: Vec<LatentVector> = (0..800).map(|_| LatentVector::random(32, &mut rng)).collect();
    let labels = vectors
        .iter()
        .map(|v| vec![u8::from(v.as_array()[0] - v.as_array()[1] > 0.0)])
        .collect();
    let ids = (0..vectors.len()).map(|i| format!("v{i}")).collect();
    let data = EmbeddingDataset::new(ids, vectors, vec!["side".into()], labels)?;
    let c = train_classifier(
        &data,
        "side",
        &ClassifierSpec::new("side"),
        &classifier::default_train_config(5),
    )?;
    println!("held-out accuracy {:.3}", c.heldout_accuracy);

    let mut z = data.vectors[0].clone();
    for y in [1, 0] {
        let t = semantic_walk(&c.model, &z, &WalkConfig::toward(y))?;
        println!(
            "toward {y}: {} iterations ({}), p {:.3} -> {:.3}, moved {:.3} rad",
            t.iterations(),
            t.reason.name(),
            classifier::predict(&c.model, &z)?,
            classifier::predict(&c.model, t.final_point())?,
            geodesic_distance(&z, t.final_point())?
        );
        z = t.final_point().clone();
    }
    Ok(())
}
