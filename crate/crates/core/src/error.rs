use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Bernoulli polynomial degree {0} (even degrees 0..=12 only)")]
    UnsupportedDegree(u32),

    #[error("point coordinate {value} outside the unit cube")]
    Domain { value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0} kernel has no closed-form squared kernel h_mu")]
    NoAnalyticSquaredKernel(&'static str),

    #[error("{0} kernel has no analytic spectrum")]
    NoAnalyticSpectrum(&'static str),

    #[error("{0} kernel has no closed-form mean embedding")]
    NoMeanEmbedding(&'static str),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid rank {rank} (allowed {min}..={max})")]
    InvalidRank { rank: usize, min: usize, max: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical consistency violated: {0}")]
    NumericalConsistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
