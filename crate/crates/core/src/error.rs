use std::path::PathBuf;

/// Errors produced anywhere in the segmentation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no data")]
    EmptyData,

    #[error("tick {index}: {reason}")]
    BadTick { index: usize, reason: String },

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("non-positive or non-finite value at index {index}")]
    BadValue { index: usize },

    #[error("interval {start}..{end} is outside 0..{len}")]
    BadInterval { start: usize, end: usize, len: usize },

    #[error("variance must be positive")]
    DegenerateVariance,

    #[error("interval {start}..{end} has zero variance; no cut possible")]
    DegenerateInterval { start: usize, end: usize },

    #[error("invalid edit: {0}")]
    BadEdit(String),

    #[error("need at least 2 segments to cluster, got {0}")]
    TooFewSegments(usize),

    #[error("cluster count {k} outside 2..={max}")]
    BadK { k: usize, max: usize },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyData
                | Error::BadTick { .. }
                | Error::TooShort { .. }
                | Error::BadValue { .. }
                | Error::BadInterval { .. }
                | Error::BadEdit(_)
                | Error::BadK { .. }
                | Error::Incompatible(_)
                | Error::Config(_)
                | Error::Parse(_)
                | Error::Io { .. }
        )
    }

    /// Stable machine-readable code, used in JSON error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyData => "EmptyData",
            Error::BadTick { .. } => "BadTick",
            Error::TooShort { .. } => "TooShort",
            Error::BadValue { .. } => "BadValue",
            Error::BadInterval { .. } => "BadInterval",
            Error::DegenerateVariance => "DegenerateVariance",
            Error::DegenerateInterval { .. } => "DegenerateInterval",
            Error::BadEdit(_) => "BadEdit",
            Error::TooFewSegments(_) => "TooFewSegments",
            Error::BadK { .. } => "BadK",
            Error::Incompatible(_) => "Incompatible",
            Error::Config(_) => "Config",
            Error::Parse(_) => "Parse",
            Error::Io { .. } => "Io",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
