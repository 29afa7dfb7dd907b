use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("design matrix is rank deficient (|R_jj| / max |R_kk| = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("non-finite function value at coordinate {coordinate}")]
    NonFiniteEvaluation { coordinate: usize },

    #[error("second-moment regression is not identifiable (g3 = {g3:.3e})")]
    NonIdentifiable { g3: f64 },

    #[error("degenerate mixture: |lambda3| = {lambda3:.3e} leaves p undefined")]
    DegenerateMixture { lambda3: f64 },

    #[error("mixture component {component} collapsed to {mass:.3} effective observations")]
    DegenerateComponent { component: usize, mass: f64 },

    #[error("efficiency bound undefined: p * n = {pn} must exceed 1")]
    InvalidBound { pn: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("column not found: {0}")]
    ColumnNotFound(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable identifier, printed by the command-line tool.
    pub fn code(&self) -> &'static str {
        match self {
            Error::RankDeficient { .. } => "rank_deficient",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::DegenerateWeights(_) => "degenerate_weights",
            Error::NonFiniteEvaluation { .. } => "non_finite_evaluation",
            Error::NonIdentifiable { .. } => "non_identifiable",
            Error::DegenerateMixture { .. } => "degenerate_mixture",
            Error::DegenerateComponent { .. } => "degenerate_component",
            Error::InvalidBound { .. } => "invalid_bound",
            Error::InvalidInput(_) => "invalid_input",
            Error::FileNotFound(_) => "file_not_found",
            Error::ColumnNotFound(_) => "column_not_found",
            Error::Parse { .. } => "parse_error",
            Error::Csv(_) => "csv_error",
            Error::Json(_) => "json_error",
            Error::Io(_) => "io_error",
        }
    }
}
