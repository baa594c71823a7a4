//! Per-attribute binary classifiers over sphere latents, and the embedding
//! dataset they are trained on.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{self, LayerSpec, LossKind, MlpModel, TrainConfig};
use crate::sphere::{normalize, LatentVector};
use crate::textfmt;

pub const EMBEDDING_FORMAT_VERSION: u64 = 1;
pub const MIN_DEPTH: usize = 4;
pub const MAX_DEPTH: usize = 7;
/// Imported vectors may deviate from unit norm by at most this much before
/// being renormalized.
pub const IMPORT_NORM_TOLERANCE: f64 = 1e-3;

/// Latent vectors with one binary label per attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingDataset {
    pub ids: Vec<String>,
    pub vectors: Vec<LatentVector>,
    pub attributes: Vec<String>,
    /// `labels[record][attribute]`, each 0 or 1.
    pub labels: Vec<Vec<u8>>,
}

impl EmbeddingDataset {
    pub fn new(
        ids: Vec<String>,
        vectors: Vec<LatentVector>,
        attributes: Vec<String>,
        labels: Vec<Vec<u8>>,
    ) -> Result<Self> {
        let data = EmbeddingDataset {
            ids,
            vectors,
            attributes,
            labels,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vectors.len();
        if n == 0 {
            return Err(Error::Invalid("embedding dataset is empty".into()));
        }
        if self.ids.len() != n || self.labels.len() != n {
            return Err(Error::Shape(format!(
                "{} vectors, {} ids, {} label rows",
                n,
                self.ids.len(),
                self.labels.len()
            )));
        }
        let d = self.vectors[0].dim();
        for (i, (v, row)) in self.vectors.iter().zip(&self.labels).enumerate() {
            if v.dim() != d {
                return Err(Error::Shape(format!(
                    "record {i} has dimension {} (expected {d})",
                    v.dim()
                )));
            }
            if row.len() != self.attributes.len() {
                return Err(Error::Shape(format!("record {i} has {} labels", row.len())));
            }
            if row.iter().any(|&l| l > 1) {
                return Err(Error::Invalid(format!("record {i} has a non-binary label")));
            }
        }
        for (a, name) in self.attributes.iter().enumerate() {
            let positives = self.labels.iter().filter(|r| r[a] == 1).count();
            if positives == 0 || positives == n {
                return Err(Error::Invalid(format!("attribute {name:?} has only one class")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::Invalid(format!("unknown attribute {name:?}")))
    }

    pub fn labels_for(&self, name: &str) -> Result<Vec<u8>> {
        let a = self.attribute_index(name)?;
        Ok(self.labels.iter().map(|r| r[a]).collect())
    }

    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    /// Vectors stacked as an `n × d` matrix.
    pub fn matrix(&self) -> Array2<f64> {
        stack(&self.vectors)
    }

    /// Writes the line-oriented export: a header object, then one record
    /// per line.
    pub fn export(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let header = Header {
            format_version: EMBEDDING_FORMAT_VERSION,
            d: self.dim(),
            attributes: self.attributes.clone(),
        };
        writeln!(out, "{}", textfmt::to_string(&header)?).expect("writing to a Vec");
        for ((id, v), row) in self.ids.iter().zip(&self.vectors).zip(&self.labels) {
            let record = Record {
                id: id.clone(),
                vector: v.to_vec(),
                attrs: self
                    .attributes
                    .iter()
                    .cloned()
                    .zip(row.iter().map(|&l| serde_json::Value::from(l)))
                    .collect(),
            };
            writeln!(out, "{}", textfmt::to_string(&record)?).expect("writing to a Vec");
        }
        textfmt::write_bytes(path, &out)
    }
}

pub fn stack(vectors: &[LatentVector]) -> Array2<f64> {
    let d = vectors.first().map_or(0, LatentVector::dim);
    let mut m = Array2::zeros((vectors.len(), d));
    for (mut row, v) in m.axis_iter_mut(Axis(0)).zip(vectors) {
        row.assign(v.as_array());
    }
    m
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u64,
    d: usize,
    attributes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    vector: Vec<f64>,
    attrs: BTreeMap<String, serde_json::Value>,
}

/// Reads an embedding export, validating every record and renormalizing
/// vectors that are within [`IMPORT_NORM_TOLERANCE`] of unit length.
pub fn import_embeddings(path: &Path) -> Result<EmbeddingDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let what = path.display().to_string();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::malformed(&what, "empty file"))?
        .map_err(|e| Error::io(path, e))?;
    let header_value: serde_json::Value =
        serde_json::from_str(&header_line).map_err(|e| Error::malformed(&what, format!("line 1: {e}")))?;
    match header_value.get("format_version").and_then(serde_json::Value::as_u64) {
        Some(EMBEDDING_FORMAT_VERSION) => {}
        Some(found) => {
            return Err(Error::Version {
                found,
                expected: EMBEDDING_FORMAT_VERSION,
            })
        }
        None => return Err(Error::malformed(&what, "line 1: missing format_version")),
    }
    let header: Header =
        serde_json::from_value(header_value).map_err(|e| Error::malformed(&what, format!("line 1: {e}")))?;

    let mut ids = Vec::new();
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |detail: String| Error::malformed(&what, format!("line {lineno}: {detail}"));
        let record: Record = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if record.vector.len() != header.d {
            return Err(bad(format!(
                "vector has {} components, header declares d = {}",
                record.vector.len(),
                header.d
            )));
        }
        let raw = Array1::from(record.vector);
        let norm = raw.dot(&raw).sqrt();
        if !((norm - 1.0).abs() <= IMPORT_NORM_TOLERANCE) {
            return Err(bad(format!(
                "vector norm {norm:.6} deviates from 1 by more than {IMPORT_NORM_TOLERANCE}"
            )));
        }
        let mut row = Vec::with_capacity(header.attributes.len());
        for name in &header.attributes {
            let value = record
                .attrs
                .get(name)
                .ok_or_else(|| bad(format!("missing attribute {name:?}")))?;
            match value.as_u64() {
                Some(l @ (0 | 1)) => row.push(l as u8),
                _ => return Err(bad(format!("attribute {name:?} has non-binary label {value}"))),
            }
        }
        ids.push(record.id);
        vectors.push(normalize(raw.view()).map_err(|e| bad(e.to_string()))?);
        labels.push(row);
    }
    EmbeddingDataset::new(ids, vectors, header.attributes, labels)
}

/// Architecture of one attribute classifier: `depth` dense layers with tanh
/// between them and a sigmoid on the single output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub attribute: String,
    pub depth: usize,
    pub width: usize,
}

impl ClassifierSpec {
    pub fn new(attribute: &str) -> Self {
        ClassifierSpec {
            attribute: attribute.to_owned(),
            depth: 5,
            width: 128,
        }
    }

    pub fn layers(&self, in_dim: usize) -> Result<Vec<LayerSpec>> {
        if !(MIN_DEPTH..=MAX_DEPTH).contains(&self.depth) {
            return Err(Error::Spec(format!(
                "classifier depth {} outside [{MIN_DEPTH}, {MAX_DEPTH}]",
                self.depth
            )));
        }
        if self.width == 0 {
            return Err(Error::Spec("classifier width must be positive".into()));
        }
        let mut specs = vec![LayerSpec::dense(in_dim, self.width), LayerSpec::tanh(self.width)];
        for _ in 0..self.depth - 2 {
            specs.push(LayerSpec::dense(self.width, self.width));
            specs.push(LayerSpec::tanh(self.width));
        }
        specs.push(LayerSpec::dense(self.width, 1));
        specs.push(LayerSpec::sigmoid(1));
        Ok(specs)
    }
}

/// Default optimizer settings for classifier training.
pub fn default_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        optimizer: nn::OptimizerKind::Adam,
        learning_rate: 1e-3,
        l2_lambda: 1e-4,
        batch_size: 32,
        epochs: 40,
        seed,
    }
}

#[derive(Clone, Debug)]
pub struct TrainedClassifier {
    pub attribute: String,
    pub model: MlpModel,
    pub train_accuracy: f64,
    pub heldout_accuracy: f64,
    pub history: Vec<f64>,
}

/// Trains the classifier for `attribute` with binary cross-entropy and
/// reports accuracy on a seeded held-out tenth of the data.
pub fn train_classifier(
    data: &EmbeddingDataset,
    attribute: &str,
    spec: &ClassifierSpec,
    config: &TrainConfig,
) -> Result<TrainedClassifier> {
    let labels = data.labels_for(attribute)?;
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::Invalid(format!("attribute {attribute:?} has only one class")));
    }
    let specs = spec.layers(data.dim())?;
    let x = data.matrix();
    let y = Array2::from_shape_fn((labels.len(), 1), |(i, _)| f64::from(labels[i]));
    let (train_idx, held_idx) = nn::holdout_split(data.len(), config.seed);
    let (x_train, y_train) = (x.select(Axis(0), &train_idx), y.select(Axis(0), &train_idx));
    let (x_held, y_held) = (x.select(Axis(0), &held_idx), y.select(Axis(0), &held_idx));

    let model = MlpModel::init(&specs, config.seed)?;
    let outcome = nn::train(model, &x_train, &y_train, LossKind::Bce, config)?;
    let train_accuracy = accuracy(&outcome.model, &x_train, &y_train)?;
    let heldout_accuracy = accuracy(&outcome.model, &x_held, &y_held)?;
    Ok(TrainedClassifier {
        attribute: attribute.to_owned(),
        model: outcome.model,
        train_accuracy,
        heldout_accuracy,
        history: outcome.history,
    })
}

/// Fraction of rows whose prediction falls on the labelled side of 0.5.
pub fn accuracy(model: &MlpModel, x: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
    let p = model.predict(x)?;
    let correct = p
        .iter()
        .zip(y.iter())
        .filter(|(&p, &y)| (p >= 0.5) == (y >= 0.5))
        .count();
    Ok(correct as f64 / y.len() as f64)
}

fn check_input(model: &MlpModel, z: &LatentVector) -> Result<()> {
    if z.dim() != model.in_dim() {
        return Err(Error::Shape(format!(
            "latent has dimension {}, classifier expects {}",
            z.dim(),
            model.in_dim()
        )));
    }
    if model.out_dim() != 1 {
        return Err(Error::Shape("classifier must have a single output".into()));
    }
    Ok(())
}

/// Probability that `z` has the attribute.
pub fn predict(model: &MlpModel, z: &LatentVector) -> Result<f64> {
    check_input(model, z)?;
    let x = z.as_array().view().insert_axis(Axis(0)).to_owned();
    Ok(model.predict(&x)?[[0, 0]])
}

/// Binary cross-entropy of the classifier's prediction at `z` against
/// target `y`, and its exact gradient with respect to `z`.
pub fn loss_and_input_gradient(model: &MlpModel, z: &LatentVector, y: u8) -> Result<(f64, Array1<f64>)> {
    check_input(model, z)?;
    if y > 1 {
        return Err(Error::Invalid(format!("target must be 0 or 1, got {y}")));
    }
    let x = z.as_array().view().insert_axis(Axis(0)).to_owned();
    let (p, cache) = model.forward(&x)?;
    let target = Array2::from_elem((1, 1), f64::from(y));
    let (loss, grad_p) = nn::data_loss(LossKind::Bce, &p, &target)?;
    let grads = model.backward(&cache, &grad_p)?;
    Ok((loss, grads.input().row(0).to_owned()))
}

/// ∂loss/∂z for target `y`.
pub fn input_gradient(model: &MlpModel, z: &LatentVector, y: u8) -> Result<Array1<f64>> {
    loss_and_input_gradient(model, z, y).map(|(_, g)| g)
}
