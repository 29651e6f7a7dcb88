//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MusemError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: String,
        expected: String,
        got: String,
    },

    #[error("empty softmax support")]
    EmptySoftmax,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("no synthetic headline available for example {id}")]
    MissingSynthetic { id: String },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("gradient check failed for {tensors}")]
    GradCheckFailed { tensors: String },
}

impl MusemError {
    /// Wraps an io error together with the path it occurred on.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        MusemError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        MusemError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, MusemError>;
