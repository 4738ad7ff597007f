use alloc::string::String;
use alloc::vec::Vec;

use crate::labeling::Target;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{target:?} item {index} has value {value}, expected 1..=7")]
    ItemOutOfRange { target: Target, index: usize, value: i64 },

    #[error("{target:?} expects {expected} items, got {got}")]
    ItemCount { target: Target, expected: usize, got: usize },

    #[error("at least 2 scores are needed to fit thresholds, got {0}")]
    TooFewScores(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("AUC undefined: every row belongs to a single class")]
    AucUndefined,

    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("missing transformer embedding for users: {0:?}")]
    MissingEmbedding(Vec<String>),

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("class {class:?} has {count} members, fewer than k={k}; use a smaller k")]
    ClassTooSmall { class: crate::Level, count: usize, k: usize },

    #[error("non-finite loss in {context} at iteration {iteration}")]
    NonFinite {
        context: &'static str,
        iteration: usize,
        /// Last parameters that produced a finite loss, when the trainer keeps them.
        checkpoint: Option<Vec<f64>>,
    },
}

impl Error {
    /// True for failures of the numerical routines rather than the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}
