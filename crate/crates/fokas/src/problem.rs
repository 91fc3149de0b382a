//! Problem data: the domain, the coupling constant and the data functions.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::{self, Expr, Var};

/// Which variables a data function depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    /// A function of `x` only (initial data).
    X,
    /// A function of `t` only (boundary data).
    T,
    /// A function of `(x, t)` (forcing).
    XT,
}

impl Arity {
    fn allows(self, v: Var) -> bool {
        matches!(
            (self, v),
            (Arity::X, Var::X) | (Arity::T, Var::T) | (Arity::XT, _)
        )
    }

    fn describe(self) -> &'static str {
        match self {
            Arity::X => "x",
            Arity::T => "t",
            Arity::XT => "x and t",
        }
    }
}

type Callback = dyn Fn(Complex64, Complex64) -> Complex64 + Send + Sync;

#[derive(Clone)]
enum Repr {
    Expr(Arc<Expr>),
    Callback(Arc<Callback>),
}

/// A data function q0, f0, g0 or h.
///
/// Either a parsed expression or a host callback; both are evaluated in
/// complex arithmetic with arguments `(x, t)`, the unused one being ignored.
#[derive(Clone)]
pub struct DataFunction {
    repr: Repr,
    arity: Arity,
}

impl fmt::Debug for DataFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Expr(e) => write!(f, "DataFunction({e})"),
            Repr::Callback(_) => write!(f, "DataFunction(<callback>)"),
        }
    }
}

impl fmt::Display for DataFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Expr(e) => write!(f, "{e}"),
            Repr::Callback(_) => write!(f, "<callback>"),
        }
    }
}

impl DataFunction {
    /// Parse `text` as a function of the variables allowed by `arity`.
    pub fn parse(text: &str, arity: Arity) -> Result<Self> {
        let e = expr::parse(text)?;
        for v in [Var::X, Var::T] {
            if e.uses(v) && !arity.allows(v) {
                return Err(Error::Arity {
                    var: if v == Var::X { "x" } else { "t" }.into(),
                    allowed: arity.describe().into(),
                });
            }
        }
        Ok(Self {
            repr: Repr::Expr(Arc::new(e)),
            arity,
        })
    }

    pub fn zero(arity: Arity) -> Self {
        Self {
            repr: Repr::Expr(Arc::new(Expr::Num(0.0))),
            arity,
        }
    }

    /// Wrap a host callback `(x, t) -> value`.
    pub fn from_fn<F>(arity: Arity, f: F) -> Self
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            repr: Repr::Callback(Arc::new(f)),
            arity,
        }
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Expr(e) => Some(e),
            Repr::Callback(_) => None,
        }
    }

    /// Literal zero expressions let the spectral layer skip whole transforms.
    pub fn is_zero(&self) -> bool {
        matches!(&self.repr, Repr::Expr(e) if e.is_literal_zero())
    }

    pub fn eval_c(&self, x: Complex64, t: Complex64) -> Complex64 {
        match &self.repr {
            Repr::Expr(e) => e.eval(x, t),
            Repr::Callback(f) => f(x, t),
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        self.eval_c(Complex64::new(x, 0.0), Complex64::new(t, 0.0))
    }

    /// Evaluate a function of one variable.
    pub fn at(&self, s: f64) -> Complex64 {
        match self.arity {
            Arity::X => self.eval(s, 0.0),
            _ => self.eval(0.0, s),
        }
    }
}

/// Free-function spelling of [`DataFunction::parse`].
pub fn parse_data_function(text: &str, arity: Arity) -> Result<DataFunction> {
    DataFunction::parse(text, arity)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { length: f64 },
    HalfLine,
}

/// An initial-boundary value problem for `q_t + q_xxx = h`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: Domain,
    /// Coupling constant in `q_x(L,t) = alpha q_x(0,t)`; unused on the half-line.
    pub alpha: f64,
    pub q0: DataFunction,
    pub f0: DataFunction,
    /// Right boundary value; unused on the half-line.
    pub g0: DataFunction,
    pub h: Option<DataFunction>,
}

/// Corner mismatches between initial and boundary data (warnings only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerResiduals {
    pub left: f64,
    pub right: Option<f64>,
}

impl ProblemSpec {
    pub fn interval(
        length: f64,
        alpha: f64,
        q0: DataFunction,
        f0: DataFunction,
        g0: DataFunction,
        h: Option<DataFunction>,
    ) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "interval length must be positive and finite, got {length}"
            )));
        }
        if !alpha.is_finite() || alpha.abs() > 1.0 {
            return Err(Error::InvalidProblem(format!(
                "coupling constant alpha = {alpha} is outside the supported range |alpha| <= 1"
            )));
        }
        Self::check_arities(&q0, &f0, Some(&g0))?;
        Ok(Self {
            domain: Domain::Interval { length },
            alpha,
            q0,
            f0,
            g0,
            h,
        })
    }

    pub fn half_line(q0: DataFunction, f0: DataFunction, h: Option<DataFunction>) -> Result<Self> {
        Self::check_arities(&q0, &f0, None)?;
        Ok(Self {
            domain: Domain::HalfLine,
            alpha: 0.0,
            q0,
            f0,
            g0: DataFunction::zero(Arity::T),
            h,
        })
    }

    fn check_arities(
        q0: &DataFunction,
        f0: &DataFunction,
        g0: Option<&DataFunction>,
    ) -> Result<()> {
        let bad = |name: &str, want: &str| {
            Err(Error::InvalidProblem(format!(
                "{name} must be a function of {want}"
            )))
        };
        if q0.arity() == Arity::T {
            return bad("q0", "x");
        }
        if f0.arity() == Arity::X {
            return bad("f0", "t");
        }
        if let Some(g) = g0 {
            if g.arity() == Arity::X {
                return bad("g0", "t");
            }
        }
        Ok(())
    }

    /// Interval length, or `f64::INFINITY` on the half-line.
    pub fn length(&self) -> f64 {
        match self.domain {
            Domain::Interval { length } => length,
            Domain::HalfLine => f64::INFINITY,
        }
    }

    pub fn is_half_line(&self) -> bool {
        matches!(self.domain, Domain::HalfLine)
    }

    pub fn forcing(&self) -> Option<&DataFunction> {
        self.h.as_ref().filter(|h| !h.is_zero())
    }

    pub fn corner_residuals(&self) -> CornerResiduals {
        let left = (self.q0.at(0.0) - self.f0.at(0.0)).norm();
        let right = match self.domain {
            Domain::Interval { length } => Some((self.q0.at(length) - self.g0.at(0.0)).norm()),
            Domain::HalfLine => None,
        };
        CornerResiduals { left, right }
    }

    /// Human-readable warnings for corner incompatibilities above `tol`.
    pub fn compatibility_warnings(&self, tol: f64) -> Vec<String> {
        let r = self.corner_residuals();
        let mut out = Vec::new();
        if r.left > tol {
            out.push(format!("corner (0,0): |q0(0) - f0(0)| = {:.3e}", r.left));
        }
        if let Some(right) = r.right {
            if right > tol {
                out.push(format!("corner (L,0): |q0(L) - g0(0)| = {right:.3e}"));
            }
        }
        out
    }
}

/// Names accepted by [`manufactured_problem`].
pub const BENCHMARKS: [&str; 7] = [
    "halfline-exp",
    "alpha0-poly",
    "alpha13-poly",
    "alpha1-sine",
    "alpha0-bc1",
    "alpha0-bc2",
    "alpha-varying-sine",
];

/// A benchmark problem together with its exact solution, when one is known.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub problem: ProblemSpec,
    pub exact: Option<DataFunction>,
}

fn xfun(s: &str) -> DataFunction {
    DataFunction::parse(s, Arity::X).expect("builtin expression")
}

fn tfun(s: &str) -> DataFunction {
    DataFunction::parse(s, Arity::T).expect("builtin expression")
}

fn xtfun(s: &str) -> DataFunction {
    DataFunction::parse(s, Arity::XT).expect("builtin expression")
}

/// Construct one of the built-in benchmark problems.
///
/// `alpha-varying-sine` uses alpha = 0.5; see [`manufactured_problem_with_alpha`].
pub fn manufactured_problem(name: &str) -> Result<Benchmark> {
    manufactured_problem_with_alpha(name, 0.5)
}

/// Like [`manufactured_problem`], with the coupling constant of
/// `alpha-varying-sine` supplied by the caller (ignored by the others).
pub fn manufactured_problem_with_alpha(name: &str, alpha: f64) -> Result<Benchmark> {
    let zero_t = || DataFunction::zero(Arity::T);
    let zero_x = || DataFunction::zero(Arity::X);
    let (problem, exact) = match name {
        "halfline-exp" => (
            ProblemSpec::half_line(
                zero_x(),
                tfun("sin(2*pi*t)"),
                Some(xtfun("2*pi*exp(-x)*cos(2*pi*t) - exp(-x)*sin(2*pi*t)")),
            )?,
            Some(xtfun("exp(-x)*sin(2*pi*t)")),
        ),
        "alpha0-poly" => (
            ProblemSpec::interval(
                1.0,
                0.0,
                zero_x(),
                zero_t(),
                tfun("sin(2*pi*t)"),
                Some(xtfun("2*pi*(2*x - x^2)*cos(2*pi*t)")),
            )?,
            Some(xtfun("(2*x - x^2)*sin(2*pi*t)")),
        ),
        "alpha13-poly" => (
            ProblemSpec::interval(
                1.0,
                1.0 / 3.0,
                zero_x(),
                zero_t(),
                tfun("2*sin(2*pi*t)"),
                Some(xtfun("2*pi*(3*x - x^2)*cos(2*pi*t)")),
            )?,
            Some(xtfun("(3*x - x^2)*sin(2*pi*t)")),
        ),
        "alpha1-sine" => (
            ProblemSpec::interval(
                1.0,
                1.0,
                xfun("sin(2*pi*x)"),
                zero_t(),
                zero_t(),
                Some(xtfun("-(2*pi)^3*cos(2*pi*x)")),
            )?,
            Some(xtfun("sin(2*pi*x)")),
        ),
        "alpha0-bc1" => (
            ProblemSpec::interval(1.0, 0.0, zero_x(), tfun("sin(2*pi*t)"), zero_t(), None)?,
            None,
        ),
        "alpha0-bc2" => (
            ProblemSpec::interval(
                1.0,
                0.0,
                zero_x(),
                tfun("sin(2*pi*t)"),
                tfun("sin(2*pi*t)"),
                None,
            )?,
            None,
        ),
        "alpha-varying-sine" => (
            ProblemSpec::interval(1.0, alpha, xfun("sin(2*pi*x)"), zero_t(), zero_t(), None)?,
            None,
        ),
        other => return Err(Error::UnknownBenchmark(other.to_string())),
    };
    Ok(Benchmark {
        name: name.to_string(),
        problem,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity_is_enforced() {
        assert!(matches!(
            DataFunction::parse("sin(x)", Arity::T),
            Err(Error::Arity { .. })
        ));
        assert!(DataFunction::parse("x*t", Arity::XT).is_ok());
    }

    #[test]
    fn alpha_out_of_range_rejected() {
        let err = ProblemSpec::interval(
            1.0,
            1.5,
            DataFunction::zero(Arity::X),
            DataFunction::zero(Arity::T),
            DataFunction::zero(Arity::T),
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("|alpha| <= 1"));
    }

    #[test]
    fn corner_residual_of_exponential_example() {
        let p = ProblemSpec::interval(
            1.0,
            (-1.0f64).exp(),
            xfun("exp(-12*x)"),
            tfun("cos(2*pi*t)"),
            tfun("sin(2*pi*t)"),
            None,
        )
        .unwrap();
        let r = p.corner_residuals();
        assert!(r.left < 1e-15);
        assert!((r.right.unwrap() - (-12.0f64).exp()).abs() < 1e-15);
        assert_eq!(p.compatibility_warnings(1e-6).len(), 1);
    }
}
