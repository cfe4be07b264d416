use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not one (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("variances violate the uncertainty bound: v_min * v_max = {0} < 1/4")]
    Heisenberg(f64),

    #[error("two-mode dimension {0} exceeds the budget of {1}")]
    DimensionBudget(usize, usize),

    #[error("invalid mode index {0} (expected 0 or 1)")]
    InvalidMode(usize),

    #[error("probability mass {mass:e} lies beyond the sampling grid at |x| = {x_max}")]
    GridExhausted { mass: f64, x_max: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("phase bin {bin} holds only {count} records (need at least {min})")]
    UnderpopulatedBin {
        bin: usize,
        count: usize,
        min: usize,
    },

    #[error("quadrature did not converge on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("non-finite log-likelihood at iteration {0}")]
    NonFiniteLikelihood(usize),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
