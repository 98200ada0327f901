use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("vertex {vertex} out of range 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense size guard exceeded: {n} > {limit}")]
    SizeGuard { n: usize, limit: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("invalid measure: {0}")]
    Measure(String),

    #[error("graphs do not share a common degree vector (max difference {0:e})")]
    DegreeMismatch(f64),

    #[error("walk budget exceeded: needs {required} walks, cap is {cap}")]
    BudgetExceeded { required: u64, cap: u64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
