//! The `latentwalk` command line: train the circle's components, walk,
//! interpolate, average, do arithmetic, and run the numeric studies.
//!
//! Every command writes a manifest with its resolved configuration, the
//! sha256 of each file it produced, summary metrics and timings. Training
//! commands keep theirs in `<workspace>/manifests/`; the others write one
//! next to their outputs under `--out`.

mod commands;
mod studies;
mod workspace;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::*;
pub use studies::*;
pub use workspace::*;

use crate::error::{Error, Result};
use crate::sphere::InterpolationMethod;
use crate::toyworld::Attribute;
use crate::walk::WalkConfig;

#[derive(Debug, Parser)]
#[command(
    name = "latentwalk",
    version,
    about = "Semantic walks on a unit-hypersphere latent space"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "workspace")]
    pub workspace: PathBuf,
    /// Output directory for walks, strips and studies [default: <workspace>/out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Classifiers trained at once
    #[arg(long, global = true, default_value_t = Attribute::ALL.len())]
    pub jobs: usize,
    /// Overwrite existing checkpoints and results
    #[arg(long, global = true)]
    pub force: bool,
}

impl GlobalArgs {
    pub fn context(&self) -> Context {
        let mut ctx = Context::new(&self.workspace, self.seed);
        if let Some(out) = &self.out {
            ctx.out = out.clone();
        }
        ctx.jobs = self.jobs;
        ctx.force = self.force;
        ctx
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample glyphs, train the autoencoder and sphere encoder
    Prepare {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long)]
        ae_epochs: Option<usize>,
        #[arg(long)]
        encoder_epochs: Option<usize>,
    },
    /// Train the mapping from sphere latents to decoder latents
    TrainMapping {
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        l2: Option<f64>,
    },
    /// Train one classifier per attribute
    TrainClassifiers {
        #[arg(long, value_delimiter = ',', default_value = "smile,eye_size,nose_size,face_width")]
        attrs: Vec<Attribute>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Walk a glyph's latent toward (y=1) or away from (y=0) an attribute
    Walk {
        /// Dataset id such as g00042, or a 32×32 PGM file
        glyph: String,
        /// smile, eye_size, nose_size or face_width
        #[arg(long)]
        attr: Attribute,
        /// 1 walks toward the attribute, 0 away from it
        #[arg(short, long, default_value_t = 1)]
        y: u8,
        #[arg(long, default_value_t = WalkConfig::default().delta)]
        delta: f64,
        #[arg(long, default_value_t = WalkConfig::default().iterations)]
        iterations: usize,
        #[arg(long, default_value_t = WalkConfig::default().snapshot_every)]
        snapshot_every: usize,
        #[arg(long, default_value_t = WalkConfig::default().stop_loss)]
        stop_loss: f64,
        #[arg(long, default_value_t = WalkConfig::default().grad_floor)]
        grad_floor: f64,
    },
    /// Decode the path between two glyphs
    Interpolate {
        from: String,
        to: String,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        /// slerp or lerp (straight line, renormalized)
        #[arg(long, default_value = "slerp")]
        method: InterpolationMethod,
    },
    /// Decode the spherical and Euclidean means of glyphs or random latents
    Average {
        glyphs: Vec<String>,
        /// Average this many random latents instead
        #[arg(long, conflicts_with = "glyphs")]
        random: Option<usize>,
    },
    /// Decode normalize(a − b + c)
    Arith { a: String, b: String, c: String },
    /// Norm of the Euclidean mean of n random latents against the spherical mean
    EvalCollapse {
        #[arg(long, value_delimiter = ',', default_value = "1,4,16,60,64")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = crate::sphere::DEFAULT_DIM)]
        dim: usize,
    },
    /// Compare backpropagation against central finite differences
    Gradcheck {
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
    },
}

fn print_manifest(m: &Manifest) {
    for a in &m.artifacts {
        println!("wrote {} ({} bytes, sha256 {})", a.path, a.bytes, &a.sha256[..16]);
    }
    for (k, v) in &m.metrics {
        println!("{k}: {v:.6}");
    }
}

/// Runs one parsed command, printing a short summary to stdout.
pub fn run(cli: Cli) -> Result<()> {
    let ctx = cli.global.context();
    match cli.command {
        Command::Prepare {
            n,
            ae_epochs,
            encoder_epochs,
        } => print_manifest(&cmd_prepare(
            &ctx,
            &PrepareOptions {
                n,
                ae_epochs,
                encoder_epochs,
            },
        )?),
        Command::TrainMapping { epochs, l2 } => {
            print_manifest(&cmd_train_mapping(&ctx, &MappingOptions { epochs, l2_lambda: l2 })?)
        }
        Command::TrainClassifiers { attrs, epochs } => {
            print_manifest(&cmd_train_classifiers(&ctx, &ClassifierOptions { attrs, epochs })?)
        }
        Command::Walk {
            glyph,
            attr,
            y,
            delta,
            iterations,
            snapshot_every,
            stop_loss,
            grad_floor,
        } => {
            let out = cmd_walk(
                &ctx,
                &WalkOptions {
                    glyph: GlyphRef::parse(&glyph),
                    attribute: attr,
                    config: WalkConfig {
                        y,
                        delta,
                        iterations,
                        snapshot_every,
                        stop_loss,
                        grad_floor,
                    },
                },
            )?;
            println!(
                "{} after {} iterations; measured {attr} {:.3} -> {:.3}",
                out.trajectory.reason.name(),
                out.trajectory.iterations(),
                out.measured[0],
                out.measured[out.measured.len() - 1]
            );
            print_manifest(&out.manifest);
        }
        Command::Interpolate {
            from,
            to,
            steps,
            method,
        } => print_manifest(&cmd_interpolate(
            &ctx,
            &InterpolateOptions {
                from: GlyphRef::parse(&from),
                to: GlyphRef::parse(&to),
                steps,
                method,
            },
        )?),
        Command::Average { glyphs, random } => {
            let inputs = match random {
                Some(n) => AverageInputs::Random(n),
                None if glyphs.is_empty() => return Err(Error::Invalid("give glyphs to average or --random N".into())),
                None => AverageInputs::Glyphs(glyphs.iter().map(|g| GlyphRef::parse(g)).collect()),
            };
            print_manifest(&cmd_average(&ctx, &AverageOptions { inputs })?)
        }
        Command::Arith { a, b, c } => print_manifest(&cmd_arith(
            &ctx,
            &ArithOptions {
                a: GlyphRef::parse(&a),
                b: GlyphRef::parse(&b),
                c: GlyphRef::parse(&c),
            },
        )?),
        Command::EvalCollapse { n, trials, dim } => {
            let (rows, manifest) = cmd_eval_collapse(&ctx, &CollapseOptions { n_list: n, trials, dim })?;
            print!("{}", collapse_table(&rows));
            print_manifest(&manifest);
        }
        Command::Gradcheck { eps } => {
            let summary = cmd_gradcheck(eps)?;
            print!("{}", gradcheck_table(&summary));
            println!("{} entries checked", summary.entries_checked);
            summary.check()?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code:
/// 0 on success, 1 for usage or validation errors, 2 for numeric failures.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
