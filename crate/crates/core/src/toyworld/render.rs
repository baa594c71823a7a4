use super::image::GlyphImage;
use super::GlyphParams;
use crate::error::Result;

pub const DEFAULT_SIZE: usize = 32;

// Geometry in canonical units on a 32×32 canvas, y pointing down.
const CENTER: f64 = 16.0;
const FACE_HALF_HEIGHT: f64 = 15.0;
const FACE_HALF_WIDTH_PER_UNIT: f64 = 12.0;
const STROKE_HALF_WIDTH: f64 = 0.6;
const EYE_OFFSET: f64 = 3.6;
const EYE_ROW: f64 = 10.0;
const EYE_RADIUS_PER_UNIT: f64 = 1.8;
const NOSE_BASE: f64 = 13.0;
const NOSE_HEIGHT_PER_UNIT: f64 = 4.0;
const NOSE_HALF_BASE_PER_UNIT: f64 = 2.2;
const MOUTH_ROW: f64 = 23.0;
const MOUTH_HALF_WIDTH: f64 = 5.0;
const MOUTH_DEPTH: f64 = 3.0;

/// Whether the canonical-space point lies on any part of the glyph.
fn inked(p: &GlyphParams, x: f64, y: f64) -> bool {
    let dx = x - CENTER;
    let dy = y - CENTER;

    // Face outline: a stroke around an ellipse, using the first-order
    // distance (ρ − 1)/|∇ρ| to the curve ρ = 1.
    let a = FACE_HALF_WIDTH_PER_UNIT * p.face_width;
    let b = FACE_HALF_HEIGHT;
    let rho = ((dx / a).powi(2) + (dy / b).powi(2)).sqrt();
    if rho > 0.0 {
        let grad = ((dx / (a * a)).powi(2) + (dy / (b * b)).powi(2)).sqrt() / rho;
        if ((rho - 1.0) / grad).abs() <= STROKE_HALF_WIDTH {
            return true;
        }
    }

    // Eyes, mirrored about the vertical midline.
    let ex = dx.abs() - EYE_OFFSET;
    let ey = y - EYE_ROW;
    let r = EYE_RADIUS_PER_UNIT * p.eye_size;
    if ex * ex + ey * ey <= r * r {
        return true;
    }

    // Nose: a downward-pointing triangle hanging from a fixed base row.
    let depth = y - NOSE_BASE;
    let h = NOSE_HEIGHT_PER_UNIT * p.nose_size;
    if depth >= 0.0 && depth <= h && dx.abs() <= NOSE_HALF_BASE_PER_UNIT * p.nose_size * (1.0 - depth / h) {
        return true;
    }

    // Mouth: a parabolic arc whose centre drops as the smile grows.
    if dx.abs() <= MOUTH_HALF_WIDTH {
        let u = dx / MOUTH_HALF_WIDTH;
        let curve = MOUTH_ROW + MOUTH_DEPTH * p.smile * (1.0 - u * u);
        let slope = -2.0 * MOUTH_DEPTH * p.smile * dx / (MOUTH_HALF_WIDTH * MOUTH_HALF_WIDTH);
        if (y - curve).abs() / (1.0 + slope * slope).sqrt() <= STROKE_HALF_WIDTH {
            return true;
        }
    }
    false
}

/// Renders a glyph at the default 32×32 size.
pub fn render_glyph(p: &GlyphParams) -> Result<GlyphImage> {
    render_glyph_sized(p, DEFAULT_SIZE)
}

/// Renders a `size × size` glyph: white background (1.0), black ink (0.0),
/// antialiased by 2×2 supersampling.
pub fn render_glyph_sized(p: &GlyphParams, size: usize) -> Result<GlyphImage> {
    p.validate()?;
    let scale = DEFAULT_SIZE as f64 / size as f64;
    let mut pixels = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let mut hits = 0u32;
            for sy in [0.25, 0.75] {
                for sx in [0.25, 0.75] {
                    let x = (col as f64 + sx) * scale;
                    let y = (row as f64 + sy) * scale;
                    if inked(p, x, y) {
                        hits += 1;
                    }
                }
            }
            pixels.push(1.0 - f64::from(hits) / 4.0);
        }
    }
    GlyphImage::new(size, size, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn darkness(img: &GlyphImage, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> f64 {
        rows.flat_map(|r| cols.clone().map(move |c| (r, c)))
            .map(|(r, c)| 1.0 - img.get(r, c))
            .sum()
    }

    #[test]
    fn neutral_glyph_is_mirror_symmetric() {
        let img = render_glyph(&GlyphParams::default()).unwrap();
        for r in 0..32 {
            for c in 0..16 {
                assert_eq!(img.get(r, c), img.get(r, 31 - c), "row {r} col {c}");
            }
        }
    }

    #[test]
    fn bigger_eyes_are_darker() {
        let small = render_glyph(&GlyphParams {
            eye_size: 0.5,
            ..Default::default()
        })
        .unwrap();
        let big = render_glyph(&GlyphParams {
            eye_size: 1.5,
            ..Default::default()
        })
        .unwrap();
        assert!(darkness(&big, 7..13, 10..22) > darkness(&small, 7..13, 10..22));
    }

    #[test]
    fn rendering_is_deterministic_and_in_range() {
        let p = GlyphParams {
            smile: 0.3,
            eye_size: 1.2,
            nose_size: 0.7,
            face_width: 1.1,
        };
        let a = render_glyph(&p).unwrap();
        let b = render_glyph(&p).unwrap();
        assert_eq!(a, b);
        assert!(a.pixels().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn out_of_range_params_are_rejected() {
        assert!(render_glyph(&GlyphParams {
            smile: 1.5,
            ..Default::default()
        })
        .is_err());
        assert!(render_glyph(&GlyphParams {
            face_width: 0.5,
            ..Default::default()
        })
        .is_err());
    }
}
