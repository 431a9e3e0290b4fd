use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
///
/// Anything that reflects bad caller input (impossible `k`, unknown rule
/// names, out-of-range indices) is kept separate from data/IO failures so the
/// CLI can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("k = {k} exceeds the number of opinions m = {m}")]
    KTooLarge { k: usize, m: usize },

    #[error("k must be at least 1")]
    KZero,

    #[error("opinion index {index} out of range for {m} opinions")]
    OpinionOutOfRange { index: usize, m: usize },

    #[error("user index {index} out of range for {n} users")]
    UserOutOfRange { index: usize, n: usize },

    #[error("duplicate opinion index {index} in selection")]
    DuplicateOpinion { index: usize },

    #[error("rule `{rule}` requires a group partition, but the instance has none")]
    MissingPartition { rule: String },

    #[error("unknown selection rule `{0}`")]
    UnknownRule(String),

    #[error("cell buffer has length {got}, expected {expected} ({n} users x {m} opinions)")]
    CellLength {
        got: usize,
        expected: usize,
        n: usize,
        m: usize,
    },

    #[error("exhaustive search refused: {reason}")]
    EnumerationGuard { reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("checksum mismatch for {path}: expected {expected}, got {actual}")]
    Checksum {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("download of {url} failed: {message}")]
    Download { url: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Convenience constructor for data-file problems.
    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by how the caller invoked an operation (bad
    /// flags or arguments), as opposed to bad data or IO failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::KTooLarge { .. }
                | Error::KZero
                | Error::OpinionOutOfRange { .. }
                | Error::UserOutOfRange { .. }
                | Error::DuplicateOpinion { .. }
                | Error::MissingPartition { .. }
                | Error::UnknownRule(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
