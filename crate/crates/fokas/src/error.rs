use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("arity mismatch: expression uses `{var}` but the function only depends on {allowed}")]
    Arity { var: String, allowed: String },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("contour validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
