use thiserror::Error;

/// Errors surfaced by the solvers and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("QoS requirement {q} exceeds the maximum achievable {q_max}")]
    InfeasibleQos { q: f64, q_max: f64 },

    #[error("infeasible subproblem: {0}")]
    Infeasible(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
