use std::path::PathBuf;

use thiserror::Error;

use crate::contexts::Category;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    /// `row` is the 1-based data row (the header is row 0).
    #[error("schema violation at row {row}, column `{column}`: {reason}")]
    SchemaViolation { row: usize, column: String, reason: String },

    #[error("insufficient data: need at least {need} days, have {have}")]
    InsufficientData { have: usize, need: usize },

    #[error("network item sets differ: {left:?} vs {right:?}")]
    SubsetMismatch { left: Vec<String>, right: Vec<String> },

    #[error("insufficient {category} pool: have {have} days, need {need}")]
    InsufficientPool { category: PoolKind, have: usize, need: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("run configurations differ: {0}")]
    ConfigMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no eligible participants among {inputs} input file(s)")]
    NoEligibleParticipants { inputs: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Which pool a permutation run failed to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Category(Category),
    Baseline,
}

impl std::fmt::Display for PoolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PoolKind::Category(c) => write!(f, "{c}"),
            PoolKind::Baseline => f.write_str("baseline"),
        }
    }
}

impl Error {
    pub(crate) fn schema(row: usize, column: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::SchemaViolation { row, column: column.into(), reason: reason.into() }
    }

    /// Process exit code: 2 for input/schema problems, 3 for statistical
    /// preconditions that the data cannot meet, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FileNotFound(_)
            | Error::SchemaViolation { .. }
            | Error::InvalidConfig(_)
            | Error::NoEligibleParticipants { .. }
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::InsufficientPool { .. } | Error::InsufficientData { .. } => 3,
            _ => 1,
        }
    }
}
