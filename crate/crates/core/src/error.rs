//! Library-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("matrix is not symmetric: max |m[i,j] - m[j,i]| = {deviation:e} exceeds relative tolerance {tolerance:e}")]
    NotSymmetric { deviation: f64, tolerance: f64 },

    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("non-finite value produced in {context}")]
    NonFinite { context: String },

    #[error("under-identified system: {instruments} instrument columns for {regressors} regressors")]
    UnderIdentified {
        instruments: usize,
        regressors: usize,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("column '{name}' listed in the schema is not present in the file header")]
    UnknownColumn { name: String },

    #[error("cannot parse '{value}' as a number at data row {row}, column '{column}'")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unseen category '{value}' in column '{column}'")]
    UnseenCategory { column: String, value: String },

    #[error("no rows remain after dropping rows with missing values")]
    EmptyAfterDrop,

    #[error("empty or missing sensitive group: {0}")]
    EmptyGroup(String),

    #[error("single-class input: every label equals {label}")]
    SingleClass { label: f64 },

    #[error("zero variance in {0}; correlation is undefined")]
    ZeroVariance(String),

    #[error(
        "did not converge after {iterations} iterations (gradient norm {gradient_norm:e}); last iterate retained"
    )]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
        last_weights: Vec<f64>,
    },

    #[error("{0}")]
    InvalidInput(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
