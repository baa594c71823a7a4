use ndarray::{Array2, Axis};

use super::data::ink_matrix;
use super::image::GlyphImage;
use super::GlyphParams;
use crate::error::{Error, Result};
use crate::nn::{self, LayerSpec, MlpModel, Mode, OptimizerState, TrainConfig};
use crate::sphere::{self, LatentVector, MIN_NORM};

/// Radians of geodesic distance per unit of normalized parameter distance
/// in the reference embedding.
pub const DISTANCE_SCALE: f64 = 0.6;

/// Reference position of a glyph on a great 4-sphere: the exponential map
/// at a fixed pole of `DISTANCE_SCALE · p̂`, where `p̂` are the normalized
/// parameters. Geodesic distance from the pole is exactly
/// `DISTANCE_SCALE · ‖p̂‖`, and pairwise distances track
/// `DISTANCE_SCALE · ‖p̂_i − p̂_j‖` to second order.
pub fn reference_embedding(p: &GlyphParams) -> [f64; 5] {
    let q = p.normalized();
    let r = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let theta = DISTANCE_SCALE * r;
    let s = if r > 0.0 { theta.sin() / r } else { DISTANCE_SCALE };
    [theta.cos(), s * q[0], s * q[1], s * q[2], s * q[3]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct SphereEncoderSpec {
    pub pixels: usize,
    pub hidden: Vec<usize>,
    pub dim: usize,
}

impl Default for SphereEncoderSpec {
    fn default() -> Self {
        SphereEncoderSpec {
            pixels: 32 * 32,
            hidden: vec![256, 256],
            dim: sphere::DEFAULT_DIM,
        }
    }
}

impl SphereEncoderSpec {
    pub fn layers(&self) -> Result<Vec<LayerSpec>> {
        if self.dim < 2 || self.pixels == 0 || self.hidden.contains(&0) {
            return Err(Error::Spec("sphere encoder dimensions must be positive, d ≥ 2".into()));
        }
        let mut layers = Vec::new();
        let mut prev = self.pixels;
        for &h in &self.hidden {
            layers.push(LayerSpec::dense(prev, h));
            layers.push(LayerSpec::tanh(h));
            prev = h;
        }
        layers.push(LayerSpec::dense(prev, self.dim));
        Ok(layers)
    }
}

pub fn default_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        optimizer: nn::OptimizerKind::Adam,
        learning_rate: 1e-3,
        l2_lambda: 0.0,
        batch_size: 64,
        epochs: 60,
        seed,
    }
}

/// `normalize(MLP(pixels))`: an embedding of glyphs onto the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereEncoder {
    pub model: MlpModel,
    pub history: Vec<f64>,
    /// Distance-matching loss over all pairs of the held-out tenth.
    pub heldout_loss: f64,
}

impl SphereEncoder {
    pub fn new(model: MlpModel) -> Self {
        SphereEncoder {
            model,
            history: Vec::new(),
            heldout_loss: f64::NAN,
        }
    }

    pub fn dim(&self) -> usize {
        self.model.out_dim()
    }

    pub fn embed(&self, img: &GlyphImage) -> Result<LatentVector> {
        let mut v = self.embed_batch(&ink_matrix(std::slice::from_ref(img)))?;
        Ok(v.remove(0))
    }

    /// Embeds rows of ink (see [`ink_matrix`]).
    pub fn embed_batch(&self, ink: &Array2<f64>) -> Result<Vec<LatentVector>> {
        let h = self.model.predict(ink)?;
        h.rows().into_iter().map(sphere::normalize).collect()
    }
}

fn target_cosines(refs: &[[f64; 5]]) -> Array2<f64> {
    let m = refs.len();
    Array2::from_shape_fn((m, m), |(i, j)| refs[i].iter().zip(&refs[j]).map(|(a, b)| a * b).sum())
}

/// Distance-matching loss over all ordered pairs `i ≠ j` of a batch,
/// `mean((e_i·e_j − r_i·r_j)²)` with `r` the reference embedding, and its
/// gradient with respect to the unnormalized outputs `h`.
fn pair_loss(h: &Array2<f64>, targets: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    let m = h.nrows();
    let norms: Vec<f64> = h.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    if norms.iter().any(|&n| !(n > MIN_NORM)) {
        return Err(Error::Degenerate("encoder output vanished".into()));
    }
    let mut e = h.clone();
    for (mut row, &n) in e.rows_mut().into_iter().zip(&norms) {
        row /= n;
    }
    let mut r = e.dot(&e.t()) - targets;
    r.diag_mut().fill(0.0);
    let pairs = (m * (m - 1)) as f64;
    let loss = r.iter().map(|v| v * v).sum::<f64>() / pairs;
    let grad_e = r.dot(&e) * (4.0 / pairs);
    let mut grad_h = grad_e;
    for ((mut g, er), &n) in grad_h.rows_mut().into_iter().zip(e.rows()).zip(&norms) {
        let radial = g.dot(&er);
        g.scaled_add(-radial, &er);
        g /= n;
    }
    Ok((loss, grad_h))
}

/// Trains the encoder so geodesic distances between embeddings match those
/// of the reference embedding. The loss sees only pairwise distances, so the
/// learned embedding is the reference up to a rotation of the sphere.
///
/// Training uses the same seeded nine-tenths split as the autoencoder.
pub fn train_sphere_encoder(
    images: &[GlyphImage],
    params: &[GlyphParams],
    spec: &SphereEncoderSpec,
    config: &TrainConfig,
) -> Result<SphereEncoder> {
    config.validate()?;
    let layers = spec.layers()?;
    if images.len() != params.len() {
        return Err(Error::Shape(format!(
            "{} images but {} params",
            images.len(),
            params.len()
        )));
    }
    if images.len() < super::autoencoder::MIN_AUTOENCODER_IMAGES {
        return Err(Error::Invalid(format!(
            "encoder training needs at least {} images, got {}",
            super::autoencoder::MIN_AUTOENCODER_IMAGES,
            images.len()
        )));
    }
    if config.batch_size < 2 {
        return Err(Error::Spec("pairwise training needs batch_size ≥ 2".into()));
    }
    let all = ink_matrix(images);
    if all.ncols() != spec.pixels {
        return Err(Error::Shape(format!(
            "images have {} pixels, spec says {}",
            all.ncols(),
            spec.pixels
        )));
    }
    let (train_idx, held_idx) = nn::holdout_split(images.len(), config.seed);
    let x = all.select(Axis(0), &train_idx);
    let coords: Vec<[f64; 5]> = train_idx.iter().map(|&i| reference_embedding(&params[i])).collect();

    let mut model = MlpModel::init(&layers, config.seed)?;
    model.set_mode(Mode::Training);
    let mut optimizer = OptimizerState::new(config.optimizer, &model);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut total = 0.0;
        let batches = nn::epoch_batches(x.nrows(), config.batch_size, config.seed, epoch);
        for (b, idx) in batches.iter().enumerate() {
            let xb = x.select(Axis(0), idx);
            let tb = target_cosines(&idx.iter().map(|&i| coords[i]).collect::<Vec<_>>());
            let (h, cache) = model.forward(&xb)?;
            let (loss, grad_h) = pair_loss(&h, &tb)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: b,
                    what: format!("loss = {loss}"),
                });
            }
            let grads = model.backward(&cache, &grad_h)?;
            optimizer.step(&mut model, &grads, config.learning_rate, config.l2_lambda)?;
            total += loss * idx.len() as f64;
        }
        history.push(total / x.nrows() as f64);
    }
    model.set_mode(Mode::Inference);
    let held_refs: Vec<[f64; 5]> = held_idx.iter().map(|&i| reference_embedding(&params[i])).collect();
    let h = model.predict(&all.select(Axis(0), &held_idx))?;
    let (heldout_loss, _) = pair_loss(&h, &target_cosines(&held_refs))?;
    Ok(SphereEncoder {
        model,
        history,
        heldout_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pair_loss_gradient_matches_finite_differences() {
        let h = array![[0.3, -1.2, 0.5], [1.1, 0.4, -0.2], [-0.7, 0.9, 0.8]];
        let refs = [
            GlyphParams {
                smile: 0.3,
                ..Default::default()
            },
            GlyphParams {
                eye_size: 0.6,
                nose_size: 1.4,
                ..Default::default()
            },
            GlyphParams {
                smile: -1.0,
                face_width: 0.8,
                ..Default::default()
            },
        ]
        .map(|p| reference_embedding(&p));
        let t = target_cosines(&refs);
        let (_, g) = pair_loss(&h, &t).unwrap();
        let eps = 1e-6;
        for i in 0..3 {
            for j in 0..3 {
                let mut hp = h.clone();
                hp[[i, j]] += eps;
                let mut hm = h.clone();
                hm[[i, j]] -= eps;
                let num = (pair_loss(&hp, &t).unwrap().0 - pair_loss(&hm, &t).unwrap().0) / (2.0 * eps);
                assert!(
                    nn::relative_error(g[[i, j]], num) < 1e-6,
                    "{i},{j}: {} vs {num}",
                    g[[i, j]]
                );
            }
        }
    }

    #[test]
    fn reference_embedding_is_unit_with_pole_distance() {
        let p = GlyphParams {
            smile: 1.0,
            eye_size: 0.5,
            nose_size: 1.5,
            face_width: 1.0,
        };
        let r = reference_embedding(&p);
        let norm: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let expected = DISTANCE_SCALE * 3f64.sqrt();
        assert!((r[0].acos() - expected).abs() < 1e-12);
        assert_eq!(reference_embedding(&GlyphParams::default())[0], 1.0);
    }
}
