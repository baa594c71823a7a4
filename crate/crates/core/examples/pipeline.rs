//! Builds a workspace: glyph dataset, autoencoder, sphere encoder, mapping
//! and the four attribute classifiers.
//!
//! ```text
//! cargo run --release --example pipeline -- [workspace] [n]
//! ```
//!
//! The other glyph examples read the workspace this writes.

use latentwalk::cli::{
    cmd_prepare, cmd_train_classifiers, cmd_train_mapping, ClassifierOptions, Context, MappingOptions, PrepareOptions,
};

fn main() -> latentwalk::Result<()> {
    let mut args = std::env::args().skip(1);
    let ws = args.next().unwrap_or_else(|| "workspace".into());
    let n = args.next().map_or(2000, |s| s.parse().expect("n must be an integer"));
    let ctx = Context {
        force: true,
        ..Context::new(&ws, 7)
    };

    let prepared = cmd_prepare(
        &ctx,
        &PrepareOptions {
            n,
            ..PrepareOptions::default()
        },
    )?;
    let mapping = cmd_train_mapping(
        &ctx,
        &MappingOptions {
            epochs: None,
            l2_lambda: None,
        },
    )?;
    let classifiers = cmd_train_classifiers(&ctx, &ClassifierOptions::default())?;
    for m in [&prepared, &mapping, &classifiers] {
        for (k, v) in &m.metrics {
            println!("{:<18} {k:<32} {v:.5}", m.command);
        }
    }
    println!("workspace ready at {ws}");
    Ok(())
}
