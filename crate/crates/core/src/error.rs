use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample size {requested} exceeds corpus size {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("invalid split sizes: {0}")]
    SplitSizes(String),

    #[error("no punctuation marks to compute percentages over")]
    NoMarks,

    #[error("empty input sentence")]
    EmptyInput,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no samples to evaluate")]
    NoSamples,

    #[error("no training data")]
    NoData,

    #[error("index {index} out of range for {len} words")]
    Index { index: usize, len: usize },

    #[error("input already contains punctuation: {0:?}")]
    AlreadyPunctuated(String),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("source {id} unreadable ({path}): {source}")]
    SourceUnreadable {
        id: String,
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("bad model file: {0}")]
    Model(String),

    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("external restorer failed: {0}")]
    Restorer(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable identifier for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SampleTooLarge { .. } => "SAMPLE_TOO_LARGE",
            Error::SplitSizes(_) => "SPLIT_SIZES",
            Error::NoMarks => "NO_MARKS",
            Error::EmptyInput => "EMPTY_INPUT",
            Error::Shape(_) => "SHAPE",
            Error::NoSamples => "NO_SAMPLES",
            Error::NoData => "NO_DATA",
            Error::Index { .. } => "INDEX",
            Error::AlreadyPunctuated(_) => "ALREADY_PUNCTUATED",
            Error::InvalidManifest(_) => "INVALID_MANIFEST",
            Error::SourceUnreadable { .. } => "SOURCE_UNREADABLE",
            Error::EmptyCorpus => "EMPTY_CORPUS",
            Error::Model(_) => "MODEL",
            Error::Record { .. } => "RECORD",
            Error::Restorer(_) => "RESTORER",
            Error::Io(_) => "IO",
            Error::Json(_) => "JSON",
        }
    }
}
