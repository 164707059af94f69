use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FusionError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}"
    )]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("failed to read image {path}: {source}")]
    ImageRead {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("failed to write image {path}: {source}")]
    ImageWrite {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FusionError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FusionError::InvalidArgument(msg.into())
    }
}
