//! Error types.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across fitting, process construction,
/// resampling, studies, and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// The design matrix is numerically rank deficient.
    #[error("rank deficient design: min |R[j,j]| = {min_diag:.3e} below tolerance {tol:.3e}")]
    RankDeficient { min_diag: f64, tol: f64 },

    /// Too few observations for the number of columns.
    #[error("degenerate sample: n = {n} rows with p = {p} design columns; need n > p")]
    DegenerateSample { n: usize, p: usize },

    /// NaN or infinity where a finite number is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Residual variance is zero (or not positive), so the standardized
    /// process is undefined.
    #[error("degenerate residual variance (sigma = {sigma:.3e}); the standardized process is undefined")]
    DegenerateVariance { sigma: f64 },

    /// Ordering refers to a covariate index outside 1..=p-1.
    #[error("covariate index {index} out of range; valid indices are 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    /// Exhaustive enumeration requested for a sample too large to enumerate.
    #[error("exhaustive enumeration supports n <= {max}; got n = {n}")]
    TooLarge { n: usize, max: usize },

    /// Envelope requested but no replicate traces were collected.
    #[error("no replicate traces were collected (collect_traces = 0)")]
    NoTraces,

    /// Scenario or configuration parameters are inconsistent.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Vectors that must agree in length do not.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// A cell could not be parsed as a number.
    #[error("parse error in {path} at row {row}, column '{column}': {detail}")]
    ParseError {
        path: String,
        row: usize,
        column: String,
        detail: String,
    },

    /// A selected cell is empty; missing values are never dropped silently.
    #[error("missing value in {path} at row {row}, column '{column}'")]
    MissingValue {
        path: String,
        row: usize,
        column: String,
    },

    /// A requested column does not exist in the file header.
    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind string for the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RankDeficient { .. } => "rank_deficient",
            Error::DegenerateSample { .. } => "degenerate_sample",
            Error::NonFinite(_) => "non_finite",
            Error::DegenerateVariance { .. } => "degenerate_variance",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::TooLarge { .. } => "too_large",
            Error::NoTraces => "no_traces",
            Error::InvalidParams(_) => "invalid_params",
            Error::LengthMismatch(_) => "length_mismatch",
            Error::ParseError { .. } => "parse_error",
            Error::MissingValue { .. } => "missing_value",
            Error::UnknownColumn(_) => "unknown_column",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
