use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("column {index} has zero norm; angle is undefined")]
    DegenerateColumn { index: usize },

    #[error("row {row} has zero standard deviation and rescale epsilon is 0")]
    DegenerateStd { row: usize },

    #[error("unsupported dimension: expected {expected}, got {got}")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("columns {i} and {j} are collinear")]
    Collinear { i: usize, j: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("memory budget exceeded: {needed} bytes needed, budget is {budget}; use pruned mode")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("census carries no two-cluster mass; evolve the tree deeper")]
    InsufficientDepth,

    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, Error>;
