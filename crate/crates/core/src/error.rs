use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("drug name is empty after normalization")]
    EmptyName,

    #[error("label {0} is not valid here")]
    InvalidLabel(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("arity violation: {0}")]
    ArityViolation(String),

    #[error("NO_COMB cannot be attached to a non-empty drug set")]
    NoCombWithDrugs,

    #[error("corpus contains no instances")]
    EmptyCorpus,

    #[error("advantage group is empty")]
    EmptyGroup,

    #[error("invalid reward weights: {0}")]
    InvalidWeights(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{}:{line}: field `{field}`: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{}:{line}: duplicate id {id:?}", path.display())]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error(
        "prediction and gold ids differ (missing from predictions: {missing_in_predictions:?}; missing from gold: {missing_in_gold:?})"
    )]
    IdMismatch {
        missing_in_predictions: Vec<String>,
        missing_in_gold: Vec<String>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable name of the variant, used in HTTP error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyName => "EmptyName",
            Error::InvalidLabel(_) => "InvalidLabel",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::ArityViolation(_) => "ArityViolation",
            Error::NoCombWithDrugs => "NoCombWithDrugs",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::EmptyGroup => "EmptyGroup",
            Error::InvalidWeights(_) => "InvalidWeights",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse { .. } => "ParseError",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::IdMismatch { .. } => "IdMismatch",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
