use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::image::GlyphImage;
use super::render::render_glyph;
use super::{Attribute, GlyphParams};
use crate::error::{Error, Result};
use crate::stats::median;

pub const MIN_DATASET_SIZE: usize = 100;

/// Rendered glyphs with their parameters and median-split binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyDataset {
    pub params: Vec<GlyphParams>,
    pub images: Vec<GlyphImage>,
    /// `labels[i][a]` is 1 when attribute `a` of glyph `i` exceeds the
    /// dataset median, indexed by [`Attribute::index`].
    pub labels: Vec<Vec<u8>>,
    pub medians: [f64; 4],
}

impl ToyDataset {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn id(i: usize) -> String {
        format!("g{i:05}")
    }
}

/// `n` parameter sets drawn i.i.d. uniform over each attribute's range.
pub fn sample_params(n: usize, seed: u64) -> Vec<GlyphParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut p = GlyphParams::default();
            for attr in Attribute::ALL {
                let (lo, hi) = attr.range();
                p.set(attr, rng.random_range(lo..=hi));
            }
            p
        })
        .collect()
}

/// Labels each value 1 when it is strictly above the median.
pub fn median_split(values: &[f64]) -> (Vec<u8>, f64) {
    let m = median(values);
    (values.iter().map(|&v| u8::from(v > m)).collect(), m)
}

pub fn sample_dataset(n: usize, seed: u64) -> Result<ToyDataset> {
    if n < MIN_DATASET_SIZE {
        return Err(Error::Invalid(format!(
            "a dataset needs at least {MIN_DATASET_SIZE} glyphs, got {n}"
        )));
    }
    let params = sample_params(n, seed);
    let images = params.iter().map(render_glyph).collect::<Result<Vec<_>>>()?;
    let mut labels = vec![vec![0u8; Attribute::ALL.len()]; n];
    let mut medians = [0.0; 4];
    for attr in Attribute::ALL {
        let values: Vec<f64> = params.iter().map(|p| p.get(attr)).collect();
        let (split, m) = median_split(&values);
        medians[attr.index()] = m;
        for (row, l) in labels.iter_mut().zip(split) {
            row[attr.index()] = l;
        }
    }
    Ok(ToyDataset {
        params,
        images,
        labels,
        medians,
    })
}

/// Images as an `n × pixels` matrix of ink (`1 − pixel value`), the form
/// every network in this module reads and writes. Ink is zero on the
/// background, which keeps inputs centred near the origin.
pub fn ink_matrix(images: &[GlyphImage]) -> Array2<f64> {
    let cols = images.first().map_or(0, |i| i.pixels().len());
    let mut m = Array2::zeros((images.len(), cols));
    for (mut row, img) in m.rows_mut().into_iter().zip(images) {
        for (dst, &v) in row.iter_mut().zip(img.pixels()) {
            *dst = 1.0 - v;
        }
    }
    m
}

/// Inverse of [`ink_matrix`] for one row, clamping into [0, 1].
pub fn image_from_ink(width: usize, height: usize, ink: ArrayView1<f64>) -> Result<GlyphImage> {
    GlyphImage::new(width, height, ink.iter().map(|v| (1.0 - v).clamp(0.0, 1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_balanced() {
        for n in [100, 101, 250] {
            let data = sample_dataset(n, 3).unwrap();
            for attr in Attribute::ALL {
                let pos = data.labels.iter().filter(|r| r[attr.index()] == 1).count() as f64;
                assert!((pos - n as f64 / 2.0).abs() <= 1.0, "{attr}: {pos} of {n}");
            }
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        assert_eq!(sample_dataset(120, 9).unwrap(), sample_dataset(120, 9).unwrap());
        assert_ne!(sample_params(5, 1), sample_params(5, 2));
    }

    #[test]
    fn ink_round_trip() {
        let data = sample_dataset(100, 1).unwrap();
        let ink = ink_matrix(&data.images[..2]);
        assert_eq!(image_from_ink(32, 32, ink.row(1)).unwrap(), data.images[1]);
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(sample_dataset(99, 0).is_err());
    }
}
