//! A procedural glyph world with known ground truth.
//!
//! Each glyph is a cartoon face drawn from four continuous attributes. The
//! renderer and the pixel measurements are exact, deterministic functions, so
//! any edit made in latent space can be checked by decoding it and measuring
//! the result.

mod autoencoder;
mod data;
mod encoder;
mod image;
mod measure;
mod render;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use autoencoder::{
    default_train_config as autoencoder_train_config, train_autoencoder, Autoencoder, AutoencoderSpec,
    MIN_AUTOENCODER_IMAGES,
};
pub use data::{image_from_ink, ink_matrix, median_split, sample_dataset, sample_params, ToyDataset, MIN_DATASET_SIZE};
pub use encoder::{
    default_train_config as encoder_train_config, reference_embedding, train_sphere_encoder, SphereEncoder,
    SphereEncoderSpec, DISTANCE_SCALE,
};
pub use image::{parse_pgm, GlyphImage};
pub use measure::measure_attribute;
pub use render::{render_glyph, render_glyph_sized, DEFAULT_SIZE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Smile,
    EyeSize,
    NoseSize,
    FaceWidth,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [
        Attribute::Smile,
        Attribute::EyeSize,
        Attribute::NoseSize,
        Attribute::FaceWidth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Smile => "smile",
            Attribute::EyeSize => "eye_size",
            Attribute::NoseSize => "nose_size",
            Attribute::FaceWidth => "face_width",
        }
    }

    /// Inclusive range of the parameter.
    pub fn range(self) -> (f64, f64) {
        match self {
            Attribute::Smile => (-1.0, 1.0),
            Attribute::EyeSize | Attribute::NoseSize => (0.5, 1.5),
            Attribute::FaceWidth => (0.7, 1.3),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Attribute {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Attribute::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown attribute {s:?}")))
    }
}

/// Ground-truth attributes of one glyph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlyphParams {
    /// Mouth curvature; positive curves the corners up.
    pub smile: f64,
    pub eye_size: f64,
    pub nose_size: f64,
    pub face_width: f64,
}

impl Default for GlyphParams {
    fn default() -> Self {
        GlyphParams {
            smile: 0.0,
            eye_size: 1.0,
            nose_size: 1.0,
            face_width: 1.0,
        }
    }
}

impl GlyphParams {
    pub fn get(&self, attr: Attribute) -> f64 {
        match attr {
            Attribute::Smile => self.smile,
            Attribute::EyeSize => self.eye_size,
            Attribute::NoseSize => self.nose_size,
            Attribute::FaceWidth => self.face_width,
        }
    }

    pub fn set(&mut self, attr: Attribute, value: f64) {
        match attr {
            Attribute::Smile => self.smile = value,
            Attribute::EyeSize => self.eye_size = value,
            Attribute::NoseSize => self.nose_size = value,
            Attribute::FaceWidth => self.face_width = value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for attr in Attribute::ALL {
            let (lo, hi) = attr.range();
            let v = self.get(attr);
            if !(lo..=hi).contains(&v) {
                return Err(Error::Invalid(format!("{attr} = {v} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Each attribute mapped linearly onto [−1, 1].
    pub fn normalized(&self) -> [f64; 4] {
        Attribute::ALL.map(|a| {
            let (lo, hi) = a.range();
            2.0 * (self.get(a) - lo) / (hi - lo) - 1.0
        })
    }
}

/// The three networks that close the circle around the sphere latent space.
#[derive(Clone, Debug)]
pub struct Pipeline {
    /// Pixels to sphere latent.
    pub encoder: SphereEncoder,
    /// Pixels to autoencoder latent, and back.
    pub autoencoder: Autoencoder,
}
