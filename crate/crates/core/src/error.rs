use std::io;

use thiserror::Error;

/// Errors produced by the factorization library.
#[derive(Debug, Error)]
pub enum NmfError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("rank {k} exceeds min(m, n) = {limit}")]
    RankTooLarge { k: usize, limit: usize },

    #[error("invalid rank {k} for a {m}x{n} matrix")]
    InvalidRank { k: usize, m: usize, n: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("p = {p} exceeds the {available} columns available for sampling")]
    PTooLarge { p: usize, available: usize },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("zero vector has no sparsity")]
    ZeroVector,

    #[error("sparsity is undefined for vectors of length {0}")]
    Undefined(usize),

    #[error("baseline error must be positive, got {0}")]
    NonpositiveBaseline(f64),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl NmfError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, NmfError::SingularSystem(_) | NmfError::NonpositiveBaseline(_))
    }
}

pub type Result<T> = std::result::Result<T, NmfError>;
