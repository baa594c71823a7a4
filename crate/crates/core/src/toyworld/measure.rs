//! Pixel-space estimators that recover glyph attributes from an image.
//!
//! Each estimator reads "ink" (1 − pixel value) inside a fixed window where
//! only one facial feature can appear, and inverts the renderer's geometry:
//!
//! - smile: ink-weighted mean row of the mouth, whose vertical offset from
//!   the mouth baseline is linear in the curvature;
//! - eye_size: total ink in the eye band; eye area grows with the square of
//!   the size;
//! - nose_size: total ink below the nose base; triangle area grows with the
//!   square of the size;
//! - face_width: ink-weighted mean horizontal distance of the outline from
//!   the midline on the middle rows.
//!
//! Windows are given in canonical 32×32 coordinates and scaled to the image.

use super::image::GlyphImage;
use super::render::DEFAULT_SIZE;
use super::Attribute;

struct Window {
    x: (f64, f64),
    y: (f64, f64),
}

const SMILE_WINDOW: Window = Window {
    x: (11.0, 21.0),
    y: (19.0, 27.0),
};
const EYE_WINDOW: Window = Window {
    x: (10.0, 22.0),
    y: (7.0, 13.0),
};
const NOSE_WINDOW: Window = Window {
    x: (12.0, 20.0),
    y: (13.0, 19.0),
};
const WIDTH_ROWS: (f64, f64) = (14.0, 18.0);
const WIDTH_MIN_OFFSET: f64 = 4.0;

// Constants from the renderer's geometry.
const MOUTH_ROW: f64 = 23.0;
/// Mean of 3·(1 − (dx/5)²) over the pixel centres dx ∈ {±0.5, …, ±4.5}.
const MOUTH_MEAN_DROP: f64 = 3.0 * (1.0 - 8.25 / 25.0);
/// Two disks of radius 1.8·s: 2π·1.8²·s².
const EYE_AREA_PER_UNIT: f64 = 2.0 * std::f64::consts::PI * 1.8 * 1.8;
/// Triangle of height 4·s and half-base 2.2·s.
const NOSE_AREA_PER_UNIT: f64 = 4.0 * 2.2;
const FACE_HALF_WIDTH_PER_UNIT: f64 = 12.0;

/// Iterates (canonical x, canonical y, ink, pixel area in canonical units).
fn ink_in<'a>(img: &'a GlyphImage, w: &'a Window) -> impl Iterator<Item = (f64, f64, f64, f64)> + 'a {
    let sx = DEFAULT_SIZE as f64 / img.width() as f64;
    let sy = DEFAULT_SIZE as f64 / img.height() as f64;
    (0..img.height()).flat_map(move |r| {
        (0..img.width()).filter_map(move |c| {
            let x = (c as f64 + 0.5) * sx;
            let y = (r as f64 + 0.5) * sy;
            let inside = x >= w.x.0 && x < w.x.1 && y >= w.y.0 && y < w.y.1;
            inside.then(|| (x, y, 1.0 - img.get(r, c), sx * sy))
        })
    })
}

/// Estimates `attr` from pixels. Returns the best estimate even for images
/// that are not clean glyphs; a blank window reads as the neutral value.
pub fn measure_attribute(img: &GlyphImage, attr: Attribute) -> f64 {
    match attr {
        Attribute::Smile => {
            let (mut wsum, mut ysum) = (0.0, 0.0);
            for (_, y, ink, _) in ink_in(img, &SMILE_WINDOW) {
                wsum += ink;
                ysum += ink * y;
            }
            if wsum == 0.0 {
                return 0.0;
            }
            (ysum / wsum - MOUTH_ROW) / MOUTH_MEAN_DROP
        }
        Attribute::EyeSize => {
            let area: f64 = ink_in(img, &EYE_WINDOW).map(|(_, _, ink, a)| ink * a).sum();
            (area / EYE_AREA_PER_UNIT).sqrt()
        }
        Attribute::NoseSize => {
            let area: f64 = ink_in(img, &NOSE_WINDOW).map(|(_, _, ink, a)| ink * a).sum();
            (area / NOSE_AREA_PER_UNIT).sqrt()
        }
        Attribute::FaceWidth => {
            let window = Window {
                x: (0.0, DEFAULT_SIZE as f64),
                y: WIDTH_ROWS,
            };
            let (mut wsum, mut xsum) = (0.0, 0.0);
            for (x, _, ink, _) in ink_in(img, &window) {
                let offset = (x - 16.0).abs();
                if offset > WIDTH_MIN_OFFSET {
                    wsum += ink;
                    xsum += ink * offset;
                }
            }
            if wsum == 0.0 {
                return 1.0;
            }
            xsum / wsum / FACE_HALF_WIDTH_PER_UNIT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toyworld::{render_glyph, GlyphParams};

    #[test]
    fn smile_measure_orders_extremes() {
        let frown = render_glyph(&GlyphParams {
            smile: -1.0,
            ..Default::default()
        })
        .unwrap();
        let grin = render_glyph(&GlyphParams {
            smile: 1.0,
            ..Default::default()
        })
        .unwrap();
        assert!(measure_attribute(&grin, Attribute::Smile) > measure_attribute(&frown, Attribute::Smile));
    }

    #[test]
    fn estimates_are_close_on_clean_renders() {
        let p = GlyphParams {
            smile: 0.4,
            eye_size: 1.2,
            nose_size: 0.8,
            face_width: 1.1,
        };
        let img = render_glyph(&p).unwrap();
        for attr in Attribute::ALL {
            let est = measure_attribute(&img, attr);
            let (lo, hi) = attr.range();
            assert!(
                (est - p.get(attr)).abs() < 0.15 * (hi - lo),
                "{attr}: estimated {est}, true {}",
                p.get(attr)
            );
        }
    }

    #[test]
    fn measurement_is_pure() {
        let img = render_glyph(&GlyphParams::default()).unwrap();
        let copy = img.clone();
        for attr in Attribute::ALL {
            assert_eq!(measure_attribute(&img, attr), measure_attribute(&copy, attr));
        }
    }
}
