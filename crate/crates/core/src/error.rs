use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field violates an invariant. Always names the field.
    #[error("config error: {field}: {message}")]
    Config { field: String, message: String },

    #[error("shape error: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("argument error: {0}")]
    Argument(String),

    #[error("dataset error: {path}: {message}")]
    Dataset { path: PathBuf, message: String },

    #[error("image format error: {0}")]
    Format(String),

    /// Non-finite loss or a similar training-time failure; carries the
    /// name of the offending loss component.
    #[error("training error: {component}: {message}")]
    Training { component: String, message: String },

    #[error("checkpoint corrupt: {0}")]
    CheckpointCorrupt(String),

    #[error("checkpoint config mismatch: {0}")]
    CheckpointConfigMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn shape(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::Shape {
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    pub fn dataset(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Dataset {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn training(component: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Training {
            component: component.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
