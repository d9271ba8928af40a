use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} nodes vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    #[error("map is not an orientation-preserving diffeomorphism (node {node}: {detail})")]
    NonDiffeomorphism { node: usize, detail: String },

    #[error("inversion did not converge at node {node} after {iterations} iterations")]
    Convergence { node: usize, iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate coefficients: {0}")]
    Degenerate(String),

    #[error("invalid initial condition: {0}")]
    InitialCondition(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config field `{key}`: {message}")]
    ConfigField { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
