use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid pattern {pattern:?}: {message}")]
    Pattern { pattern: String, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid lexicon: {0}")]
    Lexicon(String),

    #[error("coordinate ({lat}, {lon}) lies outside the configured bounding box")]
    OutOfBounds { lat: f64, lon: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("logarithmic transform requires positive values, found {0}")]
    NonPositiveLog(f64),

    #[error("collinear regressors {0} and {1}")]
    Collinear(String, String),

    #[error("singular design matrix")]
    Singular,

    #[error("empty timeline for user {0}")]
    EmptyTimeline(String),

    #[error("total income is zero")]
    ZeroIncome,

    #[error("empty pair category {0}")]
    EmptyCategory(&'static str),

    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("infeasible network: {0}")]
    InfeasibleNetwork(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn read(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Read {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Write {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
