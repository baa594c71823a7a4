use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::studies::{collapse_study, gradcheck_suite, CollapseRow, GradcheckSummary};
use super::workspace::*;
use crate::classifier::{self, ClassifierSpec, EmbeddingDataset, TrainedClassifier};
use crate::error::{Error, Result};
use crate::mapping::{self, MappingSpec};
use crate::nn::{self, Checkpoint, MlpModel};
use crate::sphere::{self, InterpolationMethod, LatentVector};
use crate::textfmt;
use crate::toyworld::{
    self, autoencoder_train_config, encoder_train_config, ink_matrix, measure_attribute, train_autoencoder,
    train_sphere_encoder, Attribute, Autoencoder, AutoencoderSpec, GlyphImage, SphereEncoder, SphereEncoderSpec,
    ToyDataset,
};
use crate::walk::{self, Trajectory, WalkConfig};

/// Columns of white between panels of an image strip.
pub const STRIP_GAP: usize = 1;

#[derive(Clone, Debug, Serialize)]
pub struct PrepareOptions {
    pub n: usize,
    pub ae_epochs: Option<usize>,
    pub encoder_epochs: Option<usize>,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions {
            n: 2000,
            ae_epochs: None,
            encoder_epochs: None,
        }
    }
}

fn with_epochs(mut config: nn::TrainConfig, epochs: Option<usize>) -> nn::TrainConfig {
    if let Some(e) = epochs {
        config.epochs = e;
    }
    config
}

/// Samples the glyph dataset, trains the autoencoder and sphere encoder, and
/// writes the dataset, three model checkpoints and the embedding file.
pub fn cmd_prepare(ctx: &Context, opts: &PrepareOptions) -> Result<Manifest> {
    let targets = [
        DATASET_FILE,
        ENCODER_FILE,
        AE_ENCODER_FILE,
        DECODER_FILE,
        EMBEDDINGS_FILE,
    ]
    .map(|f| ctx.path(f));
    for t in &targets {
        ctx.guard(t)?;
    }
    let ae_config = with_epochs(autoencoder_train_config(ctx.seed), opts.ae_epochs);
    let enc_config = with_epochs(encoder_train_config(ctx.seed), opts.encoder_epochs);
    let ae_spec = AutoencoderSpec::default();
    let enc_spec = SphereEncoderSpec::default();
    let mut manifest = Manifest::new(
        "prepare",
        ctx.seed,
        json!({
            "n": opts.n,
            "autoencoder": {
                "width": ae_spec.width, "height": ae_spec.height,
                "hidden": ae_spec.hidden, "latent_dim": ae_spec.latent_dim,
                "train": ae_config,
            },
            "sphere_encoder": {
                "pixels": enc_spec.pixels, "hidden": enc_spec.hidden, "dim": enc_spec.dim,
                "train": enc_config,
            },
        }),
    );

    let t = Instant::now();
    let data = toyworld::sample_dataset(opts.n, ctx.seed)?;
    manifest.timing("dataset", t);
    let t = Instant::now();
    let ae = train_autoencoder(&data.images, &ae_spec, &ae_config)?;
    manifest.timing("autoencoder", t);
    let t = Instant::now();
    let enc = train_sphere_encoder(&data.images, &data.params, &enc_spec, &enc_config)?;
    manifest.timing("sphere_encoder", t);
    let embeddings = embedding_dataset(&data, &enc)?;

    save_dataset(&data, ctx.seed, &targets[0])?;
    Checkpoint::new(enc.model.clone())
        .with_role(ROLE_ENCODER)
        .save(&targets[1])?;
    Checkpoint::new(ae.encoder.clone())
        .with_role(ROLE_AE_ENCODER)
        .save(&targets[2])?;
    Checkpoint::new(ae.decoder.clone())
        .with_role(ROLE_DECODER)
        .save(&targets[3])?;
    embeddings.export(&targets[4])?;
    for t in &targets {
        manifest.add_artifact(ctx, t)?;
    }
    manifest.metric("autoencoder_train_mse", ae.train_mse);
    manifest.metric("autoencoder_heldout_mse", ae.heldout_mse);
    manifest.metric("encoder_heldout_loss", enc.heldout_loss);
    manifest.write(ctx, None)?;
    Ok(manifest)
}

fn embedding_dataset(data: &ToyDataset, enc: &SphereEncoder) -> Result<EmbeddingDataset> {
    let z = enc.embed_batch(&ink_matrix(&data.images))?;
    EmbeddingDataset::new(
        (0..data.len()).map(ToyDataset::id).collect(),
        z,
        Attribute::ALL.iter().map(|a| a.name().to_owned()).collect(),
        data.labels.clone(),
    )
}

fn load_encoder(ctx: &Context) -> Result<SphereEncoder> {
    Ok(SphereEncoder::new(ctx.load_model(
        ENCODER_FILE,
        ROLE_ENCODER,
        "prepare",
    )?))
}

fn load_autoencoder(ctx: &Context) -> Result<Autoencoder> {
    let encoder = ctx.load_model(AE_ENCODER_FILE, ROLE_AE_ENCODER, "prepare")?;
    let decoder = ctx.load_model(DECODER_FILE, ROLE_DECODER, "prepare")?;
    let spec = AutoencoderSpec::default();
    Autoencoder::from_models(encoder, decoder, spec.width, spec.height)
}

fn load_mapping(ctx: &Context) -> Result<MlpModel> {
    Ok(ctx
        .load_checkpoint(&ctx.path(MAPPING_FILE), mapping::ROLE, "train-mapping")?
        .model)
}

pub fn load_classifier(ctx: &Context, attr: Attribute) -> Result<MlpModel> {
    let ckpt = ctx.load_checkpoint(&ctx.classifier_path(attr.name()), ROLE_CLASSIFIER, "train-classifiers")?;
    if ckpt.attribute.as_deref() != Some(attr.name()) {
        return Err(Error::malformed(
            "classifier checkpoint",
            format!("trained for {:?}, expected {attr}", ckpt.attribute),
        ));
    }
    Ok(ckpt.model)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MappingOptions {
    pub epochs: Option<usize>,
    pub l2_lambda: Option<f64>,
}

/// Trains F on (sphere embedding, autoencoder latent) pairs and reports the
/// circle's held-out reconstruction error next to the autoencoder's own.
pub fn cmd_train_mapping(ctx: &Context, opts: &MappingOptions) -> Result<Manifest> {
    let target = ctx.path(MAPPING_FILE);
    ctx.guard(&target)?;
    let data = load_dataset(ctx)?;
    let enc = load_encoder(ctx)?;
    let ae = load_autoencoder(ctx)?;
    let spec = MappingSpec::default();
    let mut config = with_epochs(mapping::default_train_config(ctx.seed), opts.epochs);
    if let Some(l2) = opts.l2_lambda {
        config.l2_lambda = l2;
    }
    let mut manifest = Manifest::new(
        "train-mapping",
        ctx.seed,
        json!({"in_dim": spec.in_dim, "out_dim": spec.out_dim, "hidden": spec.hidden, "train": config}),
    );

    let t = Instant::now();
    let x = ink_matrix(&data.images);
    let z = enc.embed_batch(&x)?;
    let z2 = ae.encode_batch(&x)?;
    let pairs: Vec<(LatentVector, Array1<f64>)> = z
        .iter()
        .cloned()
        .zip(z2.rows().into_iter().map(|r| r.to_owned()))
        .collect();
    let trained = mapping::train_mapping(&pairs, &spec, &config)?;
    manifest.timing("train", t);

    let (_, held) = nn::holdout_split(data.len(), ctx.seed);
    let x_held = x.select(Axis(0), &held);
    let z_held: Vec<LatentVector> = held.iter().map(|&i| z[i].clone()).collect();
    let circle = ae.decoder.predict(&mapping::map_batch(&trained.model, &z_held)?)?;
    let circle_mse = per_pixel_mse(&circle, &x_held);
    let ae_mse = ae.mse(&x_held)?;

    mapping::save_mapping(&trained.model, &target)?;
    manifest.add_artifact(ctx, &target)?;
    manifest.metric("train_mse", trained.train_mse);
    manifest.metric("heldout_mse", trained.heldout_mse);
    manifest.metric("circle_heldout_pixel_mse", circle_mse);
    manifest.metric("autoencoder_heldout_pixel_mse", ae_mse);
    manifest.metric("circle_ratio", circle_mse / ae_mse);
    manifest.write(ctx, None)?;
    Ok(manifest)
}

fn per_pixel_mse(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifierOptions {
    pub attrs: Vec<Attribute>,
    pub epochs: Option<usize>,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        ClassifierOptions {
            attrs: Attribute::ALL.to_vec(),
            epochs: None,
        }
    }
}

/// Trains one classifier per attribute, up to `ctx.jobs` at a time. Each
/// task is seeded with `seed ^ attribute index`, so results do not depend
/// on scheduling.
pub fn cmd_train_classifiers(ctx: &Context, opts: &ClassifierOptions) -> Result<Manifest> {
    if opts.attrs.is_empty() {
        return Err(Error::Invalid("no attributes requested".into()));
    }
    let mut attrs = opts.attrs.clone();
    attrs.sort();
    attrs.dedup();
    let targets: Vec<PathBuf> = attrs.iter().map(|a| ctx.classifier_path(a.name())).collect();
    for t in &targets {
        ctx.guard(t)?;
    }
    let path = ctx.path(EMBEDDINGS_FILE);
    if !path.exists() {
        return Err(Error::Invalid(format!(
            "missing {}; run `latentwalk prepare` first",
            path.display()
        )));
    }
    let data = classifier::import_embeddings(&path)?;
    let configs: Vec<nn::TrainConfig> = attrs
        .iter()
        .map(|a| {
            with_epochs(
                classifier::default_train_config(ctx.seed ^ a.index() as u64),
                opts.epochs,
            )
        })
        .collect();
    let mut manifest = Manifest::new(
        "train-classifiers",
        ctx.seed,
        json!({
            "jobs": ctx.jobs,
            "tasks": attrs.iter().zip(&configs).map(|(a, c)| {
                let spec = ClassifierSpec::new(a.name());
                json!({"attribute": a.name(), "depth": spec.depth, "width": spec.width, "train": c})
            }).collect::<Vec<_>>(),
        }),
    );

    let t = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let trained: Vec<TrainedClassifier> = pool.install(|| {
        attrs
            .par_iter()
            .zip(&configs)
            .map(|(a, c)| classifier::train_classifier(&data, a.name(), &ClassifierSpec::new(a.name()), c))
            .collect::<Result<Vec<_>>>()
    })?;
    manifest.timing("train", t);

    let mut table = String::from("attribute\ttrain_accuracy\theldout_accuracy\tfinal_loss\n");
    for (c, target) in trained.iter().zip(&targets) {
        Checkpoint::new(c.model.clone())
            .with_role(ROLE_CLASSIFIER)
            .with_attribute(&c.attribute)
            .save(target)?;
        manifest.add_artifact(ctx, target)?;
        manifest.metric(&format!("{}_heldout_accuracy", c.attribute), c.heldout_accuracy);
        let last = c.history.last().copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            table,
            "{}\t{:.4}\t{:.4}\t{}",
            c.attribute,
            c.train_accuracy,
            c.heldout_accuracy,
            textfmt::format_f64(last)
        );
    }
    let report = ctx.path("reports/classifiers.tsv");
    textfmt::write_bytes(&report, table.as_bytes())?;
    manifest.add_artifact(ctx, &report)?;
    manifest.write(ctx, None)?;
    Ok(manifest)
}

/// A glyph named by dataset id (`g00042`) or by the path of a PGM file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GlyphRef {
    Id(String),
    File(PathBuf),
}

impl GlyphRef {
    pub fn parse(s: &str) -> Self {
        let looks_like_id = s.len() > 1 && s.starts_with('g') && s[1..].bytes().all(|b| b.is_ascii_digit());
        if looks_like_id {
            GlyphRef::Id(s.to_owned())
        } else {
            GlyphRef::File(PathBuf::from(s))
        }
    }

    pub fn label(&self) -> String {
        match self {
            GlyphRef::Id(id) => id.clone(),
            GlyphRef::File(p) => p
                .file_stem()
                .map_or_else(|| "image".to_owned(), |s| s.to_string_lossy().into_owned()),
        }
    }
}

/// The trained encode → map → decode circle.
pub struct Circle {
    pub encoder: SphereEncoder,
    pub autoencoder: Autoencoder,
    pub mapping: MlpModel,
    dataset: Option<ToyDataset>,
    ctx: Context,
}

impl Circle {
    pub fn load(ctx: &Context) -> Result<Self> {
        Ok(Circle {
            encoder: load_encoder(ctx)?,
            autoencoder: load_autoencoder(ctx)?,
            mapping: load_mapping(ctx)?,
            dataset: None,
            ctx: ctx.clone(),
        })
    }

    pub fn image(&mut self, glyph: &GlyphRef) -> Result<GlyphImage> {
        match glyph {
            GlyphRef::File(p) => {
                let img = GlyphImage::load_pgm(p)?;
                let spec = AutoencoderSpec::default();
                if (img.width(), img.height()) != (spec.width, spec.height) {
                    return Err(Error::Shape(format!(
                        "{} is {}×{}, expected {}×{}",
                        p.display(),
                        img.width(),
                        img.height(),
                        spec.width,
                        spec.height
                    )));
                }
                Ok(img)
            }
            GlyphRef::Id(id) => {
                if self.dataset.is_none() {
                    self.dataset = Some(load_dataset(&self.ctx)?);
                }
                let data = self.dataset.as_ref().expect("just loaded");
                Ok(data.images[glyph_index(data, id)?].clone())
            }
        }
    }

    pub fn embed(&mut self, glyph: &GlyphRef) -> Result<LatentVector> {
        let img = self.image(glyph)?;
        self.encoder.embed(&img)
    }

    /// Decodes sphere latents through the mapping and the decoder.
    pub fn decode(&self, zs: &[LatentVector]) -> Result<Vec<GlyphImage>> {
        self.autoencoder.decode_batch(&mapping::map_batch(&self.mapping, zs)?)
    }

    /// Decodes rows that need not be unit vectors.
    pub fn decode_raw(&self, zs: &Array2<f64>) -> Result<Vec<GlyphImage>> {
        self.autoencoder.decode_batch(&self.mapping.predict(zs)?)
    }
}

fn out_dir(ctx: &Context, name: &str) -> Result<PathBuf> {
    let dir = ctx.out.join(name);
    if dir.join("manifest.json").exists() && !ctx.force {
        return Err(Error::Invalid(format!(
            "{} already holds results; pass --force to overwrite them",
            dir.display()
        )));
    }
    Ok(dir)
}

fn save_strip(path: &Path, panels: &[GlyphImage]) -> Result<()> {
    GlyphImage::hstack(panels, STRIP_GAP)?.save_pgm(path)
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkOptions {
    pub glyph: GlyphRef,
    pub attribute: Attribute,
    pub config: WalkConfig,
}

#[derive(Clone, Debug)]
pub struct WalkOutput {
    pub dir: PathBuf,
    pub trajectory: Trajectory,
    /// Pixel measurement of the walked attribute on each decoded snapshot.
    pub measured: Vec<f64>,
    pub manifest: Manifest,
}

/// Encodes the glyph, walks its latent under the attribute classifier, and
/// decodes every snapshot. Writes `trajectory.json`, `grid.pgm` (snapshots
/// left to right, the first being the input's reconstruction),
/// `snapshots.tsv` and `gradient.tsv` (per-dimension gradient at the start,
/// largest magnitude first).
pub fn cmd_walk(ctx: &Context, opts: &WalkOptions) -> Result<WalkOutput> {
    opts.config.validate()?;
    let attr = opts.attribute;
    let name = format!("walk-{}-{}-y{}", opts.glyph.label(), attr, opts.config.y);
    let dir = out_dir(ctx, &name)?;
    let mut circle = Circle::load(ctx)?;
    let clf = load_classifier(ctx, attr)?;
    let mut manifest = Manifest::new(
        "walk",
        ctx.seed,
        serde_json::to_value(opts).map_err(|e| Error::malformed("walk options", e.to_string()))?,
    );

    let z0 = circle.embed(&opts.glyph)?;
    let t = Instant::now();
    let traj = walk::semantic_walk(&clf, &z0, &opts.config)?;
    manifest.timing("walk", t);
    let panels = circle.decode(&traj.snapshots)?;
    let measured: Vec<f64> = panels.iter().map(|p| measure_attribute(p, attr)).collect();

    let files = ["trajectory.json", "grid.pgm", "snapshots.tsv", "gradient.tsv"].map(|f| dir.join(f));
    walk::export_trajectory(&traj, &files[0])?;
    save_strip(&files[1], &panels)?;
    let mut table = String::from("snapshot\titeration\tloss\tprobability\tmeasured\n");
    for (k, (z, &iter)) in traj.snapshots.iter().zip(&traj.snapshot_iters).enumerate() {
        let loss = if iter == 0 {
            traj.initial_loss
        } else {
            traj.losses[iter - 1]
        };
        let p = classifier::predict(&clf, z)?;
        let _ = writeln!(
            table,
            "{k}\t{iter}\t{}\t{}\t{}",
            textfmt::format_f64(loss),
            textfmt::format_f64(p),
            textfmt::format_f64(measured[k])
        );
    }
    textfmt::write_bytes(&files[2], table.as_bytes())?;
    let grad = classifier::input_gradient(&clf, &z0, opts.config.y)?;
    let mut order: Vec<usize> = (0..grad.len()).collect();
    order.sort_by(|&a, &b| grad[b].abs().total_cmp(&grad[a].abs()).then(a.cmp(&b)));
    let mut table = String::from("dimension\tgradient\n");
    for i in order {
        let _ = writeln!(table, "{i}\t{}", textfmt::format_f64(grad[i]));
    }
    textfmt::write_bytes(&files[3], table.as_bytes())?;

    for f in &files {
        manifest.add_artifact(ctx, f)?;
    }
    manifest.metric("initial_loss", traj.initial_loss);
    manifest.metric("final_loss", traj.losses.last().copied().unwrap_or(traj.initial_loss));
    manifest.metric("iterations", traj.iterations() as f64);
    manifest.metric("measured_first", measured[0]);
    manifest.metric("measured_last", *measured.last().expect("z0 is always a snapshot"));
    manifest.write(ctx, Some(&dir))?;
    Ok(WalkOutput {
        dir,
        trajectory: traj,
        measured,
        manifest,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpolateOptions {
    pub from: GlyphRef,
    pub to: GlyphRef,
    pub steps: usize,
    #[serde(serialize_with = "method_name")]
    pub method: InterpolationMethod,
}

fn method_name<S: serde::Serializer>(m: &InterpolationMethod, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match m {
        InterpolationMethod::Slerp => "slerp",
        InterpolationMethod::LerpRenorm => "lerp",
    })
}

/// Strip of `steps` decodes along the path between two glyph latents.
pub fn cmd_interpolate(ctx: &Context, opts: &InterpolateOptions) -> Result<Manifest> {
    let dir = out_dir(ctx, &format!("interpolate-{}-{}", opts.from.label(), opts.to.label()))?;
    let mut circle = Circle::load(ctx)?;
    let a = circle.embed(&opts.from)?;
    let b = circle.embed(&opts.to)?;
    let path = sphere::interpolation_path(&a, &b, opts.steps, opts.method)?;
    let strip = dir.join("strip.pgm");
    save_strip(&strip, &circle.decode(&path)?)?;
    let mut manifest = Manifest::new("interpolate", ctx.seed, json!(opts));
    manifest.add_artifact(ctx, &strip)?;
    manifest.metric("geodesic_distance", sphere::geodesic_distance(&a, &b)?);
    manifest.write(ctx, Some(&dir))?;
    Ok(manifest)
}

#[derive(Clone, Debug, Serialize)]
pub enum AverageInputs {
    Glyphs(Vec<GlyphRef>),
    /// This many uniform random latents drawn from the run seed.
    Random(usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct AverageOptions {
    pub inputs: AverageInputs,
}

/// Decodes the spherical mean of a set of latents next to their raw
/// Euclidean mean. For glyph inputs the strip starts with each input's
/// reconstruction.
pub fn cmd_average(ctx: &Context, opts: &AverageOptions) -> Result<Manifest> {
    let mut circle = Circle::load(ctx)?;
    let (name, zs, mut panels) = match &opts.inputs {
        AverageInputs::Glyphs(gs) => {
            let zs = gs.iter().map(|g| circle.embed(g)).collect::<Result<Vec<_>>>()?;
            let panels = circle.decode(&zs)?;
            (format!("average-{}", gs.len()), zs, panels)
        }
        AverageInputs::Random(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let dim = circle.encoder.dim();
            let zs: Vec<LatentVector> = (0..*n).map(|_| LatentVector::random(dim, &mut rng)).collect();
            (format!("average-random-{n}"), zs, Vec::new())
        }
    };
    let dir = out_dir(ctx, &name)?;
    let mean = sphere::spherical_mean(&zs)?;
    let linear_norm = sphere::linear_mean_norm(&zs)?;
    let mut linear = Array1::<f64>::zeros(mean.dim());
    for z in &zs {
        linear += z.as_array();
    }
    linear /= zs.len() as f64;
    panels.extend(circle.decode(std::slice::from_ref(&mean))?);
    panels.extend(circle.decode_raw(&linear.insert_axis(Axis(0)))?);

    let strip = dir.join("strip.pgm");
    save_strip(&strip, &panels)?;
    let mut manifest = Manifest::new("average", ctx.seed, json!(opts));
    manifest.add_artifact(ctx, &strip)?;
    manifest.metric("count", zs.len() as f64);
    manifest.metric("spherical_mean_norm", mean.norm());
    manifest.metric("linear_mean_norm", linear_norm);
    manifest.write(ctx, Some(&dir))?;
    Ok(manifest)
}

#[derive(Clone, Debug, Serialize)]
pub struct ArithOptions {
    pub a: GlyphRef,
    pub b: GlyphRef,
    pub c: GlyphRef,
}

/// Strip of the three inputs' reconstructions and the decode of
/// normalize(a − b + c).
pub fn cmd_arith(ctx: &Context, opts: &ArithOptions) -> Result<Manifest> {
    let dir = out_dir(
        ctx,
        &format!("arith-{}-{}-{}", opts.a.label(), opts.b.label(), opts.c.label()),
    )?;
    let mut circle = Circle::load(ctx)?;
    let zs = [&opts.a, &opts.b, &opts.c]
        .into_iter()
        .map(|g| circle.embed(g))
        .collect::<Result<Vec<_>>>()?;
    let result = sphere::latent_arithmetic(&zs[0], &zs[1], &zs[2])?;
    let mut all = zs;
    all.push(result);
    let strip = dir.join("strip.pgm");
    save_strip(&strip, &circle.decode(&all)?)?;
    let mut manifest = Manifest::new("arith", ctx.seed, json!(opts));
    manifest.add_artifact(ctx, &strip)?;
    manifest.write(ctx, Some(&dir))?;
    Ok(manifest)
}

#[derive(Clone, Debug, Serialize)]
pub struct CollapseOptions {
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub dim: usize,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        CollapseOptions {
            n_list: vec![1, 4, 16, 60, 64],
            trials: 1000,
            dim: sphere::DEFAULT_DIM,
        }
    }
}

pub fn collapse_table(rows: &[CollapseRow]) -> String {
    let mut table = String::from("n\ttrials\tmean_linear_norm\tstd_error\toracle\tz\tmax_spherical_deviation\n");
    for r in rows {
        let _ = writeln!(
            table,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:+.2}\t{:.3e}",
            r.n,
            r.trials,
            r.mean_linear_norm,
            r.std_error,
            r.oracle,
            r.z_score(),
            r.max_spherical_deviation
        );
    }
    table
}

/// Runs the mean-collapse study and writes `collapse.tsv`.
pub fn cmd_eval_collapse(ctx: &Context, opts: &CollapseOptions) -> Result<(Vec<CollapseRow>, Manifest)> {
    let dir = out_dir(ctx, "eval-collapse")?;
    let t = Instant::now();
    let rows = collapse_study(&opts.n_list, opts.trials, opts.dim, ctx.seed)?;
    let mut manifest = Manifest::new("eval-collapse", ctx.seed, json!(opts));
    manifest.timing("study", t);
    let table = dir.join("collapse.tsv");
    textfmt::write_bytes(&table, collapse_table(&rows).as_bytes())?;
    manifest.add_artifact(ctx, &table)?;
    for r in &rows {
        manifest.metric(&format!("mean_linear_norm_n{}", r.n), r.mean_linear_norm);
    }
    manifest.write(ctx, Some(&dir))?;
    Ok((rows, manifest))
}

/// Runs the finite-difference suite. See [`GradcheckSummary::check`] for
/// the verdict.
pub fn cmd_gradcheck(eps: f64) -> Result<GradcheckSummary> {
    gradcheck_suite(eps)
}
