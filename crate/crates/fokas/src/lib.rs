//! Unified transform evaluation of `q_t + q_xxx = h` on an interval with
//! coupled boundary conditions and on the half-line.

pub mod characteristic;
pub mod contours;
pub mod error;
pub mod evaluator;
pub mod expr;
pub mod filon;
pub mod problem;
pub mod scaled;
pub mod spectral;
pub mod verification;

pub use error::{Error, Result};
pub use problem::{
    manufactured_problem, manufactured_problem_with_alpha, parse_data_function, Arity, Benchmark,
    DataFunction, Domain, ProblemSpec, BENCHMARKS,
};
pub use scaled::Scaled;

/// Alias used in documentation of the spectral layer.
pub type ScaledExponentialSum = Scaled;

/// Format with 17 significant digits, the CSV convention of this crate.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
