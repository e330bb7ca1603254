use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("variable {index} = {value} lies outside [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("infeasible weight bounds: {0}")]
    InfeasibleBounds(String),

    #[error("no comparison with a strict preference to train on")]
    NoStrictPreference,

    #[error("decision maker failed: {0}")]
    DecisionMaker(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("campaign config hash mismatch in {dir}: found {found}, expected {expected}")]
    HashMismatch {
        dir: PathBuf,
        found: String,
        expected: String,
    },

    #[error("missing result file {0}")]
    MissingResult(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
