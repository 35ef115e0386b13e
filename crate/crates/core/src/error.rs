use thiserror::Error;

/// Errors produced by the library.
///
/// Validation failures (bad labels, inconsistent counts, degenerate inputs)
/// are distinct from I/O failures so callers can map them to different exit
/// codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: expected header {expected:?}, found {found:?}")]
    SchemaMismatch {
        path: String,
        expected: String,
        found: String,
    },

    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("unknown {kind} label {label:?} at line {line}")]
    UnknownLabel {
        line: u64,
        kind: &'static str,
        label: String,
    },

    #[error("duplicate key at line {line}: ({interest}, {ideology}, {subgroup})")]
    DuplicateKey {
        line: u64,
        interest: String,
        ideology: String,
        subgroup: String,
    },

    #[error("unknown interest {0:?}")]
    UnknownInterest(String),

    #[error("alignment undefined: interest has no liberal or conservative followers")]
    UndefinedAlignment,

    #[error("relevance undefined: {0}")]
    UndefinedRelevance(String),

    #[error("delta undefined: unweighted alignment is zero")]
    UndefinedDelta,

    #[error("no usable subgroup for interest {interest} in category {category}")]
    NoUsableSubgroup { interest: String, category: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("sample value {value} outside histogram range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("token {token:?} not in model vocabulary")]
    TokenOutsideVocabulary { token: String },

    #[error("predictor matrix is rank deficient at column {column:?}")]
    RankDeficient { column: String },

    #[error("column {0:?} not found")]
    MissingColumn(String),

    #[error("too few rows: need more than {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for filesystem-level failures, false for validation failures.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
