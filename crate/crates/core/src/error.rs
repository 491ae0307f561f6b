use std::path::PathBuf;

use thiserror::Error;

use crate::chem::SmilesError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid SMILES {smiles:?}: {source}")]
    Smiles {
        smiles: String,
        #[source]
        source: SmilesError,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid sequence: {0}")]
    Sequence(String),

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("{0}")]
    Tensor(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("non-finite loss at epoch {epoch}, step {step}: {snapshot}")]
    NonFinite {
        epoch: usize,
        step: usize,
        snapshot: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from user input (bad config, data or files)
    /// rather than an internal failure.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Tensor(_) | Error::Shape { .. } | Error::NonFinite { .. })
    }
}
