use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({src}, {dst}) is out of range for a graph with {num_nodes} nodes")]
    EdgeOutOfRange { src: usize, dst: usize, num_nodes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("class {class} has {available} candidate nodes but {required} are required")]
    InsufficientClass { class: usize, available: usize, required: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },

    #[error("non-finite value produced in {layer}")]
    NonFinite { layer: String },

    #[error("empty mask passed to {0}")]
    EmptyMask(&'static str),

    #[error("no class has enough labeled nodes to generate from")]
    NoEligibleClass,

    #[error("no valid {0} pairs for MADGap")]
    NoValidPairs(&'static str),

    #[error("{file}:{line}: {message}")]
    Parse { file: PathBuf, line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { file: path.into(), line, message: message.into() }
    }
}
