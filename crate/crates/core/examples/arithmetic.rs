//! Decodes normalize(a - b + c) for three glyphs. Needs the `pipeline`
//! workspace.

use latentwalk::cli::{cmd_arith, ArithOptions, Context, GlyphRef};

fn main() -> latentwalk::Result<()> {
    let mut args = std::env::args().skip(1);
    let ws = args.next().unwrap_or_else(|| "workspace".into());
    let mut glyph = |default: &str| GlyphRef::parse(&args.next().unwrap_or_else(|| default.into()));
    let (a, b, c) = (glyph("g00001"), glyph("g00002"), glyph("g00003"));
    let ctx = Context {
        force: true,
        ..Context::new(&ws, 7)
    };
    let m = cmd_arith(&ctx, &ArithOptions { a, b, c })?;
    println!("strip (a, b, c, result) at {}", m.artifacts[0].path);
    Ok(())
}
