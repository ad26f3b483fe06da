use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("polynomial has degree zero in x")]
    ConstantInX,

    #[error("zero polynomial")]
    ZeroPolynomial,

    #[error("empty range: lo > hi")]
    EmptyRange,

    #[error("rows are linearly dependent")]
    DependentRows,

    #[error("zero row at index {0}")]
    ZeroRow(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inexact unscaling at column {col}: entry not divisible by X^{a}*Y^{b}")]
    InexactUnscale { col: usize, a: u32, b: u32 },

    #[error("prime generation failed after {0} attempts")]
    PrimeGeneration(usize),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
