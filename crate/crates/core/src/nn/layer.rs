use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BATCHNORM_EPSILON: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.9;

/// One layer of a feedforward network.
///
/// Only dense layers change the width; batchnorm and the activations are
/// element-wise and keep `in_dim == out_dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Dense {
        in_dim: usize,
        out_dim: usize,
    },
    #[serde(rename = "batchnorm")]
    BatchNorm {
        dim: usize,
        epsilon: f64,
        /// Weight on the previous running statistic when folding in a batch.
        momentum: f64,
    },
    Tanh {
        dim: usize,
    },
    Sigmoid {
        dim: usize,
    },
}

/// Layer kind without dimensions, used for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LayerKind {
    Dense,
    BatchNorm,
    Tanh,
    Sigmoid,
}

impl LayerKind {
    pub const ALL: [LayerKind; 4] = [
        LayerKind::Dense,
        LayerKind::BatchNorm,
        LayerKind::Tanh,
        LayerKind::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Dense => "dense",
            LayerKind::BatchNorm => "batchnorm",
            LayerKind::Tanh => "tanh",
            LayerKind::Sigmoid => "sigmoid",
        }
    }
}

impl std::fmt::Display for LayerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl LayerSpec {
    pub fn dense(in_dim: usize, out_dim: usize) -> Self {
        LayerSpec::Dense { in_dim, out_dim }
    }

    pub fn batchnorm(dim: usize) -> Self {
        LayerSpec::BatchNorm {
            dim,
            epsilon: BATCHNORM_EPSILON,
            momentum: BATCHNORM_MOMENTUM,
        }
    }

    pub fn tanh(dim: usize) -> Self {
        LayerSpec::Tanh { dim }
    }

    pub fn sigmoid(dim: usize) -> Self {
        LayerSpec::Sigmoid { dim }
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            LayerSpec::Dense { .. } => LayerKind::Dense,
            LayerSpec::BatchNorm { .. } => LayerKind::BatchNorm,
            LayerSpec::Tanh { .. } => LayerKind::Tanh,
            LayerSpec::Sigmoid { .. } => LayerKind::Sigmoid,
        }
    }

    pub fn in_dim(&self) -> usize {
        match *self {
            LayerSpec::Dense { in_dim, .. } => in_dim,
            LayerSpec::BatchNorm { dim, .. } | LayerSpec::Tanh { dim } | LayerSpec::Sigmoid { dim } => dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match *self {
            LayerSpec::Dense { out_dim, .. } => out_dim,
            _ => self.in_dim(),
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        if self.in_dim() == 0 || self.out_dim() == 0 {
            return Err(Error::Spec(format!("layer {index}: dimensions must be positive")));
        }
        if let LayerSpec::BatchNorm { epsilon, momentum, .. } = *self {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(Error::Spec(format!("layer {index}: batchnorm epsilon must be > 0")));
            }
            if !(momentum > 0.0 && momentum < 1.0) {
                return Err(Error::Spec(format!(
                    "layer {index}: batchnorm momentum must lie in (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Checks every layer and that consecutive widths chain.
pub fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Spec("a model needs at least one layer".into()));
    }
    for (i, spec) in specs.iter().enumerate() {
        spec.validate(i)?;
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].out_dim() != pair[1].in_dim() {
            return Err(Error::Spec(format!(
                "layer {} outputs {} values but layer {} expects {}",
                i,
                pair[0].out_dim(),
                i + 1,
                pair[1].in_dim()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_mismatch_is_a_spec_error() {
        let specs = [LayerSpec::dense(2, 3), LayerSpec::dense(5, 1)];
        assert!(matches!(validate_specs(&specs), Err(Error::Spec(_))));
    }

    #[test]
    fn batchnorm_hyperparameters_are_checked() {
        let bad = LayerSpec::BatchNorm {
            dim: 3,
            epsilon: 0.0,
            momentum: 0.9,
        };
        assert!(validate_specs(&[bad]).is_err());
        let bad = LayerSpec::BatchNorm {
            dim: 3,
            epsilon: 1e-5,
            momentum: 1.0,
        };
        assert!(validate_specs(&[bad]).is_err());
        assert!(validate_specs(&[LayerSpec::batchnorm(3)]).is_ok());
    }

    #[test]
    fn serde_tags_are_lowercase() {
        let text = serde_json::to_string(&LayerSpec::batchnorm(4)).unwrap();
        assert!(text.starts_with(r#"{"kind":"batchnorm""#), "{text}");
        let text = serde_json::to_string(&LayerSpec::dense(2, 3)).unwrap();
        assert_eq!(text, r#"{"kind":"dense","in_dim":2,"out_dim":3}"#);
    }
}
