use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("expected count for cell {cell} is zero")]
    ZeroExpected { cell: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("matrix is singular: {0}")]
    Singular(String),
    #[error("working covariance for cluster `{cluster}` is singular")]
    SingularCluster { cluster: String },
    #[error("kappa is undefined when expected agreement is 1")]
    UndefinedKappa,
}

pub type Result<T> = std::result::Result<T, StatsError>;
