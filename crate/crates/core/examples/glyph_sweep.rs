//! Renders each glyph attribute across its range and measures it back from
//! the pixels. Writes one PGM strip per attribute to the current directory.

use latentwalk::toyworld::{measure_attribute, render_glyph, Attribute, GlyphImage, GlyphParams};

fn main() -> latentwalk::Result<()> {
    for attr in Attribute::ALL {
        let (lo, hi) = attr.range();
        let mut images = Vec::new();
        let mut measured = Vec::new();
        for k in 0..7 {
            let mut p = GlyphParams::default();
            p.set(attr, lo + (hi - lo) * f64::from(k) / 6.0);
            let img = render_glyph(&p)?;
            measured.push(format!("{:.3}", measure_attribute(&img, attr)));
            images.push(img);
        }
        let path = std::path::PathBuf::from(format!("sweep-{attr}.pgm"));
        GlyphImage::hstack(&images, 1)?.save_pgm(&path)?;
        println!(
            "{:<10} [{lo}, {hi}] measured {}  -> {}",
            attr.name(),
            measured.join(" "),
            path.display()
        );
    }
    Ok(())
}
