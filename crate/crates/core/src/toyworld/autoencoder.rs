use ndarray::{Array1, Array2, Axis};

use super::data::{image_from_ink, ink_matrix};
use super::image::GlyphImage;
use crate::error::{Error, Result};
use crate::nn::{self, LayerSpec, LossKind, MlpModel, TrainConfig};

pub const MIN_AUTOENCODER_IMAGES: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderSpec {
    pub width: usize,
    pub height: usize,
    pub hidden: usize,
    pub latent_dim: usize,
}

impl Default for AutoencoderSpec {
    fn default() -> Self {
        AutoencoderSpec {
            width: 32,
            height: 32,
            hidden: 256,
            latent_dim: 64,
        }
    }
}

impl AutoencoderSpec {
    /// Encoder layers followed by decoder layers; the encoder is the first
    /// three.
    pub fn layers(&self) -> Result<Vec<LayerSpec>> {
        if self.latent_dim == 0 || self.hidden == 0 || self.width * self.height == 0 {
            return Err(Error::Spec("autoencoder dimensions must be positive".into()));
        }
        let pixels = self.width * self.height;
        Ok(vec![
            LayerSpec::dense(pixels, self.hidden),
            LayerSpec::tanh(self.hidden),
            LayerSpec::dense(self.hidden, self.latent_dim),
            LayerSpec::dense(self.latent_dim, self.hidden),
            LayerSpec::tanh(self.hidden),
            LayerSpec::dense(self.hidden, pixels),
            LayerSpec::sigmoid(pixels),
        ])
    }
}

pub const ENCODER_LAYERS: usize = 3;

pub fn default_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        optimizer: nn::OptimizerKind::Adam,
        learning_rate: 2e-3,
        l2_lambda: 0.0,
        batch_size: 64,
        epochs: 40,
        seed,
    }
}

/// Pixels to a flat latent (the encoder) and back (the decoder).
#[derive(Clone, Debug, PartialEq)]
pub struct Autoencoder {
    pub encoder: MlpModel,
    pub decoder: MlpModel,
    pub width: usize,
    pub height: usize,
    /// Per-pixel MSE on the training nine tenths.
    pub train_mse: f64,
    /// Per-pixel MSE on the held-out tenth.
    pub heldout_mse: f64,
    pub history: Vec<f64>,
}

impl Autoencoder {
    pub fn from_models(encoder: MlpModel, decoder: MlpModel, width: usize, height: usize) -> Result<Self> {
        let pixels = width * height;
        if encoder.in_dim() != pixels || decoder.out_dim() != pixels || encoder.out_dim() != decoder.in_dim() {
            return Err(Error::Shape(format!(
                "encoder {}→{} and decoder {}→{} do not form a {width}×{height} autoencoder",
                encoder.in_dim(),
                encoder.out_dim(),
                decoder.in_dim(),
                decoder.out_dim()
            )));
        }
        Ok(Autoencoder {
            encoder,
            decoder,
            width,
            height,
            train_mse: f64::NAN,
            heldout_mse: f64::NAN,
            history: Vec::new(),
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.out_dim()
    }

    pub fn encode(&self, img: &GlyphImage) -> Result<Array1<f64>> {
        let z = self.encode_batch(&ink_matrix(std::slice::from_ref(img)))?;
        Ok(z.row(0).to_owned())
    }

    /// Encodes rows of ink (see [`ink_matrix`]).
    pub fn encode_batch(&self, ink: &Array2<f64>) -> Result<Array2<f64>> {
        self.encoder.predict(ink)
    }

    pub fn decode(&self, z: &Array1<f64>) -> Result<GlyphImage> {
        let x = z.view().insert_axis(Axis(0)).to_owned();
        let out = self.decoder.predict(&x)?;
        image_from_ink(self.width, self.height, out.row(0))
    }

    pub fn decode_batch(&self, z: &Array2<f64>) -> Result<Vec<GlyphImage>> {
        let out = self.decoder.predict(z)?;
        out.rows()
            .into_iter()
            .map(|r| image_from_ink(self.width, self.height, r))
            .collect()
    }

    pub fn reconstruct(&self, img: &GlyphImage) -> Result<GlyphImage> {
        self.decode(&self.encode(img)?)
    }

    /// Mean per-pixel squared reconstruction error over rows of ink.
    pub fn mse(&self, ink: &Array2<f64>) -> Result<f64> {
        let out = self.decoder.predict(&self.encoder.predict(ink)?)?;
        Ok(per_pixel_mse(&out, ink))
    }
}

pub(crate) fn per_pixel_mse(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let sum: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    sum / a.len() as f64
}

/// Trains on a seeded nine-tenths split and reports held-out per-pixel MSE
/// on the rest.
pub fn train_autoencoder(images: &[GlyphImage], spec: &AutoencoderSpec, config: &TrainConfig) -> Result<Autoencoder> {
    let layers = spec.layers()?;
    if images.len() < MIN_AUTOENCODER_IMAGES {
        return Err(Error::Invalid(format!(
            "autoencoder training needs at least {MIN_AUTOENCODER_IMAGES} images, got {}",
            images.len()
        )));
    }
    if images
        .iter()
        .any(|i| (i.width(), i.height()) != (spec.width, spec.height))
    {
        return Err(Error::Shape(format!(
            "all images must be {}×{}",
            spec.width, spec.height
        )));
    }
    let x = ink_matrix(images);
    let (train_idx, held_idx) = nn::holdout_split(images.len(), config.seed);
    let x_train = x.select(Axis(0), &train_idx);
    let x_held = x.select(Axis(0), &held_idx);

    let model = MlpModel::init(&layers, config.seed)?;
    let outcome = nn::train(model, &x_train, &x_train, LossKind::Mse, config)?;
    let encoder = outcome.model.slice(0..ENCODER_LAYERS)?;
    let decoder = outcome.model.slice(ENCODER_LAYERS..layers.len())?;
    let mut ae = Autoencoder::from_models(encoder, decoder, spec.width, spec.height)?;
    ae.train_mse = ae.mse(&x_train)?;
    ae.heldout_mse = ae.mse(&x_held)?;
    ae.history = outcome.history;
    Ok(ae)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_latent_is_a_spec_error() {
        let spec = AutoencoderSpec {
            latent_dim: 0,
            ..Default::default()
        };
        assert!(matches!(spec.layers(), Err(Error::Spec(_))));
    }

    #[test]
    fn too_few_images_is_rejected() {
        let img = GlyphImage::new(32, 32, vec![1.0; 1024]).unwrap();
        let images = vec![img; 10];
        let err = train_autoencoder(&images, &AutoencoderSpec::default(), &default_train_config(0));
        assert!(err.is_err());
    }
}
