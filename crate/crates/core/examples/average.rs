//! Spherical against Euclidean averaging, for a few glyphs and for many
//! random latents. Needs the `pipeline` workspace.

use latentwalk::cli::{cmd_average, AverageInputs, AverageOptions, Context, GlyphRef};

fn main() -> latentwalk::Result<()> {
    let ws = std::env::args().nth(1).unwrap_or_else(|| "workspace".into());
    let ctx = Context {
        force: true,
        ..Context::new(&ws, 7)
    };
    let glyphs = ["g00001", "g00002", "g00003", "g00004"].map(GlyphRef::parse).to_vec();
    for inputs in [AverageInputs::Glyphs(glyphs), AverageInputs::Random(64)] {
        let m = cmd_average(&ctx, &AverageOptions { inputs })?;
        println!(
            "{} latents: Euclidean mean norm {:.4}, strip {}",
            m.metrics["count"], m.metrics["linear_mean_norm"], m.artifacts[0].path
        );
    }
    Ok(())
}
