use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("unknown label `{label}` (closest vocabulary entry: `{nearest}`)")]
    UnknownLabel { label: String, nearest: String },

    #[error("invalid vocabulary: {0}")]
    Vocabulary(String),

    #[error("{} image id(s) listed in both train and test lists: {}", .0.len(), preview(.0))]
    SplitOverlap(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown architecture `{0}`; valid names: alexnet, resnet152, inception_v3")]
    UnknownArch(String),

    #[error("unknown layer `{name}`; available layers: {}", .available.join(", "))]
    UnknownLayer { name: String, available: Vec<String> },

    #[error("class `{class}` is not in the vocabulary [{}]", .vocabulary.join(", "))]
    UnknownClass { class: String, vocabulary: Vec<String> },

    #[error("pretrained weights unavailable: {0}")]
    Weights(String),

    #[error("checkpoint `{field}` mismatch: checkpoint has {found}, run expects {expected}")]
    CheckpointMismatch {
        field: String,
        expected: String,
        found: String,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("non-finite loss at epoch {epoch}, step {step}; batch ids: {}", .ids.join(", "))]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        ids: Vec<String>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode image: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Nn(#[from] cxrlens_nn::NnError),
}

fn preview(ids: &[String]) -> String {
    let mut s = ids.iter().take(5).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > 5 {
        s.push_str(", ...");
    }
    s
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Numerical failures are distinguished from usage and validation errors.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::NonFiniteLoss { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
