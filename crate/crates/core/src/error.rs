use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside the domain of the {what} generating function")]
    Domain { what: String, value: f64 },

    #[error("tuple {index:?}: {source}")]
    TupleDomain {
        index: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("node id {id} out of range for n = {n}")]
    OutOfRange { id: usize, n: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("conflicting duplicate hyperedge {index:?}")]
    DuplicateEdge { index: Vec<usize> },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("divergence kind {0} has no specialized loss")]
    UnsupportedKind(String),

    #[error("no positive tuple in the drawn slice after {retries} redraws")]
    EmptyPositiveSlice { retries: usize },

    #[error("non-finite gradient component at position {position}")]
    NonFiniteGradient { position: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("index set too large: {size} tuples exceeds the guard of {limit}")]
    TooManyTuples { size: u128, limit: u128 },

    #[error("hyperlink weight {weight} at {index:?} is not binary")]
    NonBinaryWeights { index: Vec<usize>, weight: f64 },

    #[error("only one class present among labels")]
    SingleClass,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(what: impl Into<String>, value: f64) -> Self {
        Error::Domain { what: what.into(), value }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }
}
