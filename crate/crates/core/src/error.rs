use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("angular kernel scale must be positive and finite, got {0}")]
    InvalidKernel(f64),

    #[error("{path}: line {line}: {message}")]
    SceneParse { path: String, line: usize, message: String },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed image {path}: {message}")]
    ImageFormat { path: String, message: String },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("scene is black: all {0} normalization samples had zero contribution")]
    BlackScene(usize),

    #[error("chain occupies a zero-contribution state")]
    InvalidState,

    #[error("series too short or degenerate: {0}")]
    TooShort(String),

    #[error("png encoding failed: {0}")]
    Png(#[from] image::ImageError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
