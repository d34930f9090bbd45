//! Error type shared by every module, with CLI exit-code mapping.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A Cholesky-type factorization met a nonpositive pivot. The caller may
    /// retry with an explicit jitter; nothing is regularized silently.
    #[error("matrix not positive definite: pivot {pivot:.6e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// An operation that needs a distributional exposure prior received a
    /// plug-in prior.
    #[error("exposure prior variant `{0}` not valid here")]
    VariantMismatch(&'static str),

    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("subject {subject}: exposure window is empty or outside 1..={t_len}")]
    EmptyWindow { subject: usize, t_len: usize },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("missing column `{column}` in {path}")]
    MissingColumn { column: String, path: String },

    #[error("bad numeric value in {path} row {row}, column `{column}`")]
    BadNumeric {
        path: String,
        row: usize,
        column: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 validation, 3 numeric failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotPositiveDefinite { .. } => 3,
            Error::Io(_) => 4,
            _ => 2,
        }
    }
}
