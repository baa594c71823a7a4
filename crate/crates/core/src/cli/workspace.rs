use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{Checkpoint, MlpModel};
use crate::textfmt;
use crate::toyworld::{render_glyph, Attribute, GlyphParams, ToyDataset};

pub const DATASET_FILE: &str = "dataset.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";
pub const ENCODER_FILE: &str = "models/encoder.json";
pub const AE_ENCODER_FILE: &str = "models/ae_encoder.json";
pub const DECODER_FILE: &str = "models/decoder.json";
pub const MAPPING_FILE: &str = "models/mapping.json";

pub const ROLE_ENCODER: &str = "encoder";
pub const ROLE_AE_ENCODER: &str = "ae_encoder";
pub const ROLE_DECODER: &str = "decoder";
pub const ROLE_CLASSIFIER: &str = "classifier";

/// Settings shared by every command.
#[derive(Clone, Debug)]
pub struct Context {
    pub seed: u64,
    pub workspace: PathBuf,
    pub out: PathBuf,
    pub jobs: usize,
    pub force: bool,
}

impl Context {
    pub fn new(workspace: impl Into<PathBuf>, seed: u64) -> Self {
        let workspace = workspace.into();
        Context {
            seed,
            out: workspace.join("out"),
            workspace,
            jobs: Attribute::ALL.len(),
            force: false,
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.workspace.join(rel)
    }

    pub fn classifier_path(&self, attribute: &str) -> PathBuf {
        self.workspace.join("classifiers").join(format!("{attribute}.json"))
    }

    /// Refuses to replace an existing file unless `--force` was given.
    pub fn guard(&self, path: &Path) -> Result<()> {
        if path.exists() && !self.force {
            return Err(Error::Invalid(format!(
                "{} already exists; pass --force to overwrite it",
                path.display()
            )));
        }
        Ok(())
    }

    pub fn load_checkpoint(&self, path: &Path, role: &str, hint: &str) -> Result<Checkpoint> {
        if !path.exists() {
            return Err(Error::Invalid(format!(
                "missing checkpoint {}; run `latentwalk {hint}` first",
                path.display()
            )));
        }
        let ckpt = Checkpoint::load(path)?;
        if ckpt.role.as_deref() != Some(role) {
            return Err(Error::malformed(
                path.display().to_string(),
                format!("role is {:?}, expected {role:?}", ckpt.role),
            ));
        }
        Ok(ckpt)
    }

    pub fn load_model(&self, rel: &str, role: &str, hint: &str) -> Result<MlpModel> {
        Ok(self.load_checkpoint(&self.path(rel), role, hint)?.model)
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    format_version: u64,
    seed: u64,
    params: Vec<GlyphParams>,
    medians: [f64; 4],
    labels: Vec<Vec<u8>>,
}

pub fn save_dataset(data: &ToyDataset, seed: u64, path: &Path) -> Result<()> {
    textfmt::write_file(
        path,
        &DatasetFile {
            format_version: 1,
            seed,
            params: data.params.clone(),
            medians: data.medians,
            labels: data.labels.clone(),
        },
    )
}

/// Reads the parameter list back and re-renders every glyph.
pub fn load_dataset(ctx: &Context) -> Result<ToyDataset> {
    let path = ctx.path(DATASET_FILE);
    if !path.exists() {
        return Err(Error::Invalid(format!(
            "missing {}; run `latentwalk prepare` first",
            path.display()
        )));
    }
    let f: DatasetFile = textfmt::read_file(&path, "dataset")?;
    if f.format_version != 1 {
        return Err(Error::Version {
            found: f.format_version,
            expected: 1,
        });
    }
    if f.labels.len() != f.params.len() {
        return Err(Error::malformed("dataset", "labels and params differ in length"));
    }
    let images = f.params.iter().map(render_glyph).collect::<Result<Vec<_>>>()?;
    Ok(ToyDataset {
        params: f.params,
        images,
        labels: f.labels,
        medians: f.medians,
    })
}

/// Position of a glyph id such as `g00042` in the dataset.
pub fn glyph_index(data: &ToyDataset, id: &str) -> Result<usize> {
    id.strip_prefix('g')
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&i| i < data.len() && ToyDataset::id(i) == id)
        .ok_or_else(|| {
            Error::Invalid(format!(
                "unknown glyph id {id:?} (dataset has g00000..{})",
                ToyDataset::id(data.len() - 1)
            ))
        })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one command run: resolved configuration, produced files with
/// content hashes, summary metrics and wall-clock timings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub artifacts: Vec<Artifact>,
    pub metrics: BTreeMap<String, f64>,
    pub timings_ms: BTreeMap<String, u64>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            command: command.to_owned(),
            seed,
            config,
            artifacts: Vec::new(),
            metrics: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn add_artifact(&mut self, ctx: &Context, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let shown = path
            .strip_prefix(&ctx.workspace)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        self.artifacts.push(Artifact {
            path: shown,
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_owned(), value);
    }

    pub fn timing(&mut self, name: &str, started: std::time::Instant) {
        self.timings_ms
            .insert(name.to_owned(), started.elapsed().as_millis() as u64);
    }

    /// Writes `manifests/<command>.json` (or `<out>/manifest.json` when
    /// `dir` is given) and returns its path.
    pub fn write(&self, ctx: &Context, dir: Option<&Path>) -> Result<PathBuf> {
        let path = match dir {
            Some(d) => d.join("manifest.json"),
            None => ctx.workspace.join("manifests").join(format!("{}.json", self.command)),
        };
        textfmt::write_file(&path, self)?;
        Ok(path)
    }
}
