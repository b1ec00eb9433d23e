use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("line {line}: duplicate image_id {id:?}")]
    DuplicateId { line: usize, id: String },

    #[error("line {line}: unknown {field} value {value:?}")]
    UnknownAttribute {
        line: usize,
        field: &'static str,
        value: String,
    },

    #[error("line {line}: missing {field}")]
    MissingField { line: usize, field: &'static str },

    #[error("line {line}: malformed score for {id:?}: {message}")]
    MalformedScore {
        line: usize,
        id: String,
        message: String,
    },

    #[error("line {line}: scores for {id:?} sum to {sum}, expected 1")]
    ScoreSum { line: usize, id: String, sum: f64 },

    #[error("line {line}: mixed {field} in one prediction file ({first:?} vs {found:?})")]
    MixedPredictionFile {
        line: usize,
        field: &'static str,
        first: String,
        found: String,
    },

    #[error("prediction setting {predictions:?} does not match manifest setting {manifest:?}")]
    SettingMismatch {
        manifest: String,
        predictions: String,
    },

    #[error("no prediction for manifest records: {}", .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("predictions without manifest record: {}", .0.join(", "))]
    OrphanPredictions(Vec<String>),

    #[error("group {0} selects no rows")]
    EmptyGroup(String),

    #[error("group {group} has no rows eligible for {what}")]
    NoEligibleRows { group: String, what: String },

    #[error("confusion counts are all zero")]
    ZeroCounts,

    #[error("cannot compare results of different models ({base:?} vs {comparison:?})")]
    ModelMismatch { base: String, comparison: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("output file name collision: {first:?} and {second:?} both map to {file_name}")]
    OutputCollision {
        first: String,
        second: String,
        file_name: String,
    },

    #[error("{} image(s) failed to compress; first: {}", .0.len(), .0.first().map(|f| f.to_string()).unwrap_or_default())]
    Compression(Vec<FileFailure>),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Per-image failure collected by the compression harness.
#[derive(Debug, Clone)]
pub struct FileFailure {
    pub image_id: String,
    pub message: String,
}

impl std::fmt::Display for FileFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.image_id, self.message)
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
