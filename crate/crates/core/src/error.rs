use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode image: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("no patch satisfies the region constraint")]
    EmptyPatchSet,

    #[error("image of {width}x{height} is too small: {reason}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        reason: String,
    },

    #[error("insufficient patches for noise estimation: {count} patches, need at least {required}")]
    InsufficientPatches { count: usize, required: usize },

    #[error("reference noise variance is zero")]
    DegenerateReference,

    #[error("unknown segment label {0}")]
    UnknownLabel(usize),

    #[error("all values are identical; cannot form {k} clusters")]
    DegenerateInput { k: usize },

    #[error("EmptyDataset: no matched inpainted/mask pairs under {0}")]
    EmptyDataset(PathBuf),

    #[error("region covers {fraction:.3} of the image, more than half")]
    RegionTooLarge { fraction: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn decode(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Decode {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}
