use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for system size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("magnetization outside the hypercube at spin {index} (m = {value})")]
    OutsideHypercube { index: usize, value: f64 },

    #[error("saturated spin {index}: 1 - F^2 = {factor:e}")]
    DegenerateFactor { index: usize, factor: f64 },

    #[error("system size {n} exceeds the dense limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("experiment grid has {cells} cells, budget is {budget}")]
    BudgetExceeded { cells: u64, budget: u64 },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures that come from the numerics rather than from bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::DegenerateFactor { .. } | Error::OutsideHypercube { .. })
    }
}
