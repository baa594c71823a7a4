use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::textfmt;

/// Grayscale image, row-major, values in [0, 1] (1 is white).
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GlyphImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{} pixels for a {width}×{height} image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invalid(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(GlyphImage { width, height, pixels })
    }

    /// Builds an image from network output, clamping into [0, 1].
    pub fn from_activations(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        GlyphImage::new(width, height, values.iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn to_array(&self) -> Array1<f64> {
        Array1::from(self.pixels.clone())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Per-pixel mean squared difference.
    pub fn mse(&self, other: &GlyphImage) -> Result<f64> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Shape("images differ in size".into()));
        }
        let sum: f64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum / self.pixels.len() as f64)
    }

    /// Places images side by side with `gap` white columns between them.
    pub fn hstack(images: &[GlyphImage], gap: usize) -> Result<GlyphImage> {
        let Some(first) = images.first() else {
            return Err(Error::Invalid("nothing to stack".into()));
        };
        let h = first.height;
        if images.iter().any(|i| i.height != h) {
            return Err(Error::Shape("images differ in height".into()));
        }
        let w: usize = images.iter().map(|i| i.width).sum::<usize>() + gap * (images.len() - 1);
        let mut pixels = vec![1.0; w * h];
        let mut x0 = 0;
        for img in images {
            for r in 0..h {
                let src = &img.pixels[r * img.width..(r + 1) * img.width];
                pixels[r * w + x0..r * w + x0 + img.width].copy_from_slice(src);
            }
            x0 += img.width + gap;
        }
        GlyphImage::new(w, h, pixels)
    }

    /// Plain (P2) PGM with maxval 255; each value is `round(255·v)`.
    pub fn to_pgm(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.pixels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| ((v * 255.0).round() as u8).to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        textfmt::write_bytes(path, self.to_pgm().as_bytes())
    }

    pub fn load_pgm(path: &Path) -> Result<GlyphImage> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_pgm(&text)
    }
}

/// Parses a plain PGM (P2) document, scaling values by `1/maxval`.
pub fn parse_pgm(text: &str) -> Result<GlyphImage> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let bad = |d: &str| Error::malformed("pgm", d);
    if tokens.next() != Some("P2") {
        return Err(bad("missing P2 magic"));
    }
    let mut number = |name: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| bad(&format!("missing {name}")))?
            .parse::<usize>()
            .map_err(|e| bad(&format!("{name}: {e}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for i in 0..width * height {
        let v = number(&format!("pixel {i}"))?;
        if v > maxval {
            return Err(bad(&format!("pixel {i} exceeds maxval")));
        }
        pixels.push(v as f64 / maxval as f64);
    }
    GlyphImage::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_at_byte_precision() {
        let img = GlyphImage::new(3, 2, vec![0.0, 0.5, 1.0, 0.25, 0.75, 1.0]).unwrap();
        let text = img.to_pgm();
        assert!(text.starts_with("P2\n3 2\n255\n"));
        let back = parse_pgm(&text).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() <= 0.5 / 255.0);
        }
        assert_eq!(back.to_pgm(), text);
    }

    #[test]
    fn hstack_places_images_left_to_right() {
        let black = GlyphImage::new(2, 2, vec![0.0; 4]).unwrap();
        let grey = GlyphImage::new(2, 2, vec![0.5; 4]).unwrap();
        let s = GlyphImage::hstack(&[black, grey], 1).unwrap();
        assert_eq!(s.width(), 5);
        assert_eq!(s.get(0, 0), 0.0);
        assert_eq!(s.get(1, 2), 1.0);
        assert_eq!(s.get(1, 4), 0.5);
    }

    #[test]
    fn malformed_pgm() {
        assert!(parse_pgm("P5\n1 1\n255\n0").is_err());
        assert!(parse_pgm("P2\n2 2\n255\n0 0 0").is_err());
        assert!(parse_pgm("P2\n1 1\n255\n300").is_err());
    }
}
