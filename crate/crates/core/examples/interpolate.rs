//! Decodes slerp and renormalized-lerp paths between two glyphs. Needs the
//! `pipeline` workspace.

use latentwalk::cli::{cmd_interpolate, Context, GlyphRef, InterpolateOptions};
use latentwalk::sphere::InterpolationMethod;

fn main() -> latentwalk::Result<()> {
    let mut args = std::env::args().skip(1);
    let ws = args.next().unwrap_or_else(|| "workspace".into());
    let from = GlyphRef::parse(&args.next().unwrap_or_else(|| "g00001".into()));
    let to = GlyphRef::parse(&args.next().unwrap_or_else(|| "g00002".into()));
    for method in [InterpolationMethod::Slerp, InterpolationMethod::LerpRenorm] {
        let ctx = Context::new(&ws, 7);
        let ctx = Context {
            force: true,
            out: ctx.out.join(format!("{method:?}").to_lowercase()),
            ..ctx
        };
        let m = cmd_interpolate(
            &ctx,
            &InterpolateOptions {
                from: from.clone(),
                to: to.clone(),
                steps: 8,
                method,
            },
        )?;
        println!(
            "{method:?}: {:?}",
            m.artifacts.iter().map(|a| &a.path).collect::<Vec<_>>()
        );
    }
    Ok(())
}
