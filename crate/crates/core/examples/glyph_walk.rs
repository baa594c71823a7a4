//! Walks a glyph's latent toward one attribute and prints the pixel
//! measurement of every decoded snapshot. Needs the `pipeline` workspace.
//!
//! ```text
//! cargo run --release --example glyph_walk -- [workspace] [glyph] [attribute]
//! ```

use latentwalk::cli::{cmd_walk, Context, GlyphRef, WalkOptions};
use latentwalk::walk::WalkConfig;

fn main() -> latentwalk::Result<()> {
    let mut args = std::env::args().skip(1);
    let ws = args.next().unwrap_or_else(|| "workspace".into());
    let glyph = GlyphRef::parse(&args.next().unwrap_or_else(|| "g00003".into()));
    let attribute = args.next().unwrap_or_else(|| "smile".into()).parse()?;
    let ctx = Context {
        force: true,
        ..Context::new(&ws, 7)
    };

    for y in [1, 0] {
        let config = WalkConfig {
            stop_loss: 0.0,
            ..WalkConfig::toward(y)
        };
        let out = cmd_walk(
            &ctx,
            &WalkOptions {
                glyph: glyph.clone(),
                attribute,
                config,
            },
        )?;
        let t = &out.trajectory;
        println!("toward {y}: {} iterations ({})", t.iterations(), t.reason.name());
        for (iter, m) in t.snapshot_iters.iter().zip(&out.measured) {
            println!("  iteration {iter:>3}  measured {attribute} {m:+.3}");
        }
        println!("  grid at {}", out.dir.join("grid.pgm").display());
    }
    Ok(())
}
