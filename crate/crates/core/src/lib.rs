//! Semantic editing on a unit-hypersphere latent space.
//!
//! The crate closes an encode → map → decode circle over a procedural glyph
//! world so every step can be measured:
//!
//! - [`nn`]: feedforward networks with exact backpropagation.
//! - [`sphere`]: unit vectors, geodesic distance, slerp, spherical means,
//!   latent arithmetic and seeded perturbation.
//! - [`mapping`]: the network carrying sphere embeddings into the decoder's
//!   latent space.
//! - [`classifier`]: per-attribute binary classifiers over sphere latents and
//!   their input gradients.
//! - [`walk`]: constant-arc gradient walks that push a latent towards (or
//!   away from) an attribute.
//! - [`toyworld`]: glyph renderer, pixel measurements, autoencoder and sphere
//!   encoder standing in for a real face pipeline.
//! - [`cli`]: the experiment harness behind the `latentwalk` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod cli;
mod error;
pub mod mapping;
pub mod nn;
pub mod sphere;
pub mod stats;
pub mod textfmt;
pub mod toyworld;
pub mod walk;

pub use error::{Error, Result};
pub use sphere::LatentVector;
