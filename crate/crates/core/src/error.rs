use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures while decoding model files and IDX datasets.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("bad magic: expected {expected}, found {found}")]
    BadMagic { expected: String, found: String },

    #[error("truncated weights: manifest needs {needed} floats, blob holds {available}")]
    TruncatedWeights { needed: usize, available: usize },

    #[error("weight blob length {0} is not a multiple of 4 bytes")]
    MisalignedWeights(usize),

    #[error("weight blob has {extra} unreferenced trailing floats")]
    TrailingWeights { extra: usize },

    #[error("shape chain broken at layer {layer}: {reason}")]
    ShapeChain { layer: usize, reason: String },

    #[error("layer {layer}: parameter slice `{slice}` has length {found}, expected {expected}")]
    ParameterCount {
        layer: usize,
        slice: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("short read: expected {expected} bytes, found {found}")]
    ShortRead { expected: usize, found: usize },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("non-finite parameter in layer {0}")]
    NonFinite(usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("class {class} has only {available} non-triggering inputs, {requested} requested")]
    InsufficientSeeds {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
