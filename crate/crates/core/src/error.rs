use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A layer list, network spec or config that cannot describe a valid model.
    #[error("invalid spec: {0}")]
    Spec(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input that is well-formed but violates a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("ambiguous geodesic: inputs are antipodal (angle {angle:.9} rad)")]
    Antipodal { angle: f64 },

    #[error("did not converge after {iterations} iterations (last update {last_update:e})")]
    NonConvergence { iterations: usize, last_update: f64 },

    #[error("non-finite value at epoch {epoch}, batch {batch}: {what}")]
    NonFinite { epoch: usize, batch: usize, what: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("cache does not belong to this model: {0}")]
    StaleCache(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("malformed {what}: {detail}")]
    Malformed { what: String, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn malformed(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Malformed {
            what: what.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 1 for validation
    /// problems, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite { .. } | Error::Numeric(_) | Error::NonConvergence { .. } => 2,
            _ => 1,
        }
    }
}
