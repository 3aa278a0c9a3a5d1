use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite value at point {index}")]
    NonFinite { index: usize },

    #[error("label {label} at point {index} is not in {{0, 1}}")]
    NonBinaryLabel { index: usize, label: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input dimension {dim} exceeds the exact trainer cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    /// The exact trainer refuses instead of falling back to a heuristic.
    #[error("subproblem budget exceeded: {count} subproblems needed, budget is {budget}")]
    BudgetExceeded { count: u64, budget: u64 },

    #[error("projection tie between points {first} and {second} after {attempts} directions")]
    ProjectionTie {
        first: usize,
        second: usize,
        attempts: usize,
    },

    #[error("interpolation invariant violated at step {step}: {detail}")]
    InvariantViolated { step: usize, detail: String },

    #[error("instance is not normalized: no S1 point at the origin")]
    NotNormalized,

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("network does not fit the data: max pointwise error {max_error:e}")]
    NotZeroLoss { max_error: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
