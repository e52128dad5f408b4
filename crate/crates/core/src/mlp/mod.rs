//! Single-hidden-layer tanh networks as objectives, and the datasets they
//! are trained on.

mod data;
mod idx;
mod network;

use thiserror::Error;

pub use data::{downsample, synth_blobs, Dataset, Targets, BLOB_STD};
pub use idx::{load_idx, parse_idx, write_idx_images, write_idx_labels, IMAGE_MAGIC, LABEL_MAGIC};
pub use network::{make_mlp, Loss, MlpObjective, MlpSpec};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("{inputs} inputs but {targets} targets")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("sample {index} has {found} features, expected {expected}")]
    InconsistentDims { index: usize, expected: usize, found: usize },
    #[error("non-finite feature in sample {0}")]
    NonFinite(usize),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("dataset has no image geometry")]
    NotAnImage,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("network/dataset mismatch: {0}")]
    SpecMismatch(String),
}
