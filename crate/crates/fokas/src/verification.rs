//! Finite-difference reference solver, error metrics and parameter sweeps.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::characteristic::find_zeros_cached;
use crate::contours::ContourOverrides;
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_grid, EvalSettings, SolutionGrid};
use crate::problem::{DataFunction, ProblemSpec};

type C64 = Complex64;

/// Controls for [`fd_reference`].
///
/// Time stepping is trapezoidal (Crank–Nicolson), which is unconditionally
/// stable for `∂ₓ³`; `nt` only sets accuracy. A step with `dt·(nx-1)³/L³`
/// of order `10⁵` or more still solves reliably but the error then is
/// dominated by time stepping, so `nt ≈ 5 nx` is a good default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FDSettings {
    /// Grid points including both ends.
    pub nx: usize,
    /// Time steps to `t_end`.
    pub nt: usize,
    pub t_end: f64,
    /// Number of output levels after `t = 0`; must divide `nt`.
    pub outputs: usize,
}

impl FDSettings {
    pub fn new(nx: usize, nt: usize, t_end: f64, outputs: usize) -> Self {
        Self {
            nx,
            nt,
            t_end,
            outputs,
        }
    }
}

/// `(offset, weight)` stencil for `h³ ∂ₓ³` centred at a row.
const CENTRED: [(isize, f64); 4] = [(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)];
/// One-sided stencil at `x₁` on the points `x₀..x₄`.
const ONE_SIDED: [(isize, f64); 5] = [(-1, -1.5), (0, 5.0), (1, -6.0), (2, 3.0), (3, -0.5)];

/// Solve `q_t + q_xxx = h`, `q(0,t)=f0`, `q(L,t)=g0`, `q_x(L,t)=αq_x(0,t)`.
///
/// Rows `0` and `nx-1` hold the Dirichlet data, row `nx-2` the coupled
/// derivative condition with second-order one-sided differences at both
/// ends; the remaining rows carry the equation.
pub fn fd_reference(problem: &ProblemSpec, s: &FDSettings) -> Result<SolutionGrid> {
    if problem.is_half_line() {
        return Err(Error::InvalidArgument("the FD reference is for interval problems".into()));
    }
    if s.nx < 32 || s.nt == 0 || s.outputs == 0 || s.nt % s.outputs != 0 {
        return Err(Error::InvalidArgument(format!(
            "need nx >= 32, nt > 0 and outputs dividing nt, got {s:?}"
        )));
    }
    if !(s.t_end > 0.0 && s.t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be positive, got {}", s.t_end)));
    }
    let n = s.nx;
    let l = problem.length();
    let dx = l / (n - 1) as f64;
    let dt = s.t_end / s.nt as f64;
    let xs: Vec<f64> = (0..n).map(|i| if i + 1 == n { l } else { dx * i as f64 }).collect();
    let c = 0.5 * dt / (dx * dx * dx);

    let stencil = |i: usize| -> &'static [(isize, f64)] {
        if i == 1 {
            &ONE_SIDED
        } else {
            &CENTRED
        }
    };
    let mut m = DMatrix::<f64>::zeros(n, n);
    m[(0, 0)] = 1.0;
    m[(n - 1, n - 1)] = 1.0;
    // (3q_n - 4q_{n-1} + q_{n-2}) - α(-3q_0 + 4q_1 - q_2) = 0, scaled by 2dx
    let cr = n - 2;
    m[(cr, n - 1)] = 3.0;
    m[(cr, n - 2)] += -4.0;
    m[(cr, n - 3)] += 1.0;
    m[(cr, 0)] += 3.0 * problem.alpha;
    m[(cr, 1)] += -4.0 * problem.alpha;
    m[(cr, 2)] += problem.alpha;
    for i in 1..n - 2 {
        m[(i, i)] += 1.0;
        for &(o, w) in stencil(i) {
            m[(i, (i as isize + o) as usize)] += c * w;
        }
    }
    let lu = m.lu();
    if !lu.is_invertible() {
        return Err(Error::Numerical("singular FD system".into()));
    }

    let forcing = problem.forcing();
    let h_at = |t: f64| -> Vec<C64> {
        match forcing {
            Some(h) => xs.iter().map(|&x| h.eval(x, t)).collect(),
            None => vec![C64::new(0.0, 0.0); n],
        }
    };
    let mut q: Vec<C64> = xs.iter().map(|&x| problem.q0.at(x)).collect();
    // blow-up threshold: far above anything the data can drive
    let data_max = |t: f64| problem.f0.at(t).norm().max(problem.g0.at(t).norm());
    let mut reach = 1.0 + q.iter().map(|v| v.norm()).fold(0.0, f64::max) + data_max(0.0);
    let mut h_max: f64 = 0.0;
    let mut values = vec![q.clone()];
    let mut ts = vec![0.0];
    let mut h_old = h_at(0.0);
    let every = s.nt / s.outputs;
    let mut rhs_re = DVector::<f64>::zeros(n);
    let mut rhs_im = DVector::<f64>::zeros(n);
    for step in 1..=s.nt {
        let t = if step == s.nt { s.t_end } else { dt * step as f64 };
        let h_new = h_at(t);
        h_max = h_new.iter().map(|v| v.norm()).fold(h_max, f64::max);
        reach = reach.max(1.0 + data_max(t));
        let bound = 1e6 * (reach + t * h_max);
        let f = problem.f0.at(t);
        let g = problem.g0.at(t);
        let mut rhs = vec![C64::new(0.0, 0.0); n];
        rhs[0] = f;
        rhs[n - 1] = g;
        for i in 1..n - 2 {
            let mut d3 = C64::new(0.0, 0.0);
            for &(o, w) in stencil(i) {
                d3 += q[(i as isize + o) as usize] * w;
            }
            rhs[i] = q[i] - d3 * c + (h_old[i] + h_new[i]) * (0.5 * dt);
        }
        for i in 0..n {
            rhs_re[i] = rhs[i].re;
            rhs_im[i] = rhs[i].im;
        }
        let re = lu.solve(&rhs_re).ok_or_else(|| Error::Numerical("FD solve failed".into()))?;
        let im = lu.solve(&rhs_im).ok_or_else(|| Error::Numerical("FD solve failed".into()))?;
        for i in 0..n {
            q[i] = C64::new(re[i], im[i]);
        }
        if q.iter().any(|v| !(v.norm() <= bound)) {
            return Err(Error::Numerical(format!("FD solution blew up at t={t}")));
        }
        h_old = h_new;
        if step % every == 0 {
            values.push(q.clone());
            ts.push(t);
        }
    }
    Ok(SolutionGrid {
        diagnostics: Vec::new(),
        failures: vec![None; ts.len()],
        xs,
        ts,
        values,
    })
}

/// The values of `grid` at the given nodes, which must be grid nodes.
pub fn restrict(grid: &SolutionGrid, xs: &[f64], ts: &[f64]) -> Result<SolutionGrid> {
    let find = |all: &[f64], v: f64, what: &str| -> Result<usize> {
        all.iter()
            .position(|&a| (a - v).abs() <= 1e-9 * (1.0 + v.abs()))
            .ok_or_else(|| Error::InvalidArgument(format!("{what} = {v} is not a grid node")))
    };
    let ix: Vec<usize> = xs.iter().map(|&x| find(&grid.xs, x, "x")).collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(ts.len());
    for &t in ts {
        let j = find(&grid.ts, t, "t")?;
        values.push(ix.iter().map(|&i| grid.values[j][i]).collect());
    }
    Ok(SolutionGrid {
        xs: xs.to_vec(),
        ts: ts.to_vec(),
        values,
        diagnostics: Vec::new(),
        failures: vec![None; ts.len()],
    })
}

/// An FD solution on the uniform grid `nx × nt` covering `[0, L] × [0, t_end]`.
///
/// The FD grid refines the output grid `refine` times in space (more if
/// needed to reach 32 points) and uses about `10·(fine nx - 1)` time steps.
pub fn fd_matching(problem: &ProblemSpec, nx: usize, nt: usize, t_end: f64, refine: usize) -> Result<SolutionGrid> {
    if nx < 2 || nt < 2 || refine == 0 {
        return Err(Error::InvalidArgument("need nx, nt >= 2 and refine >= 1".into()));
    }
    let refine = refine.max(31usize.div_ceil(nx - 1));
    let fine = (nx - 1) * refine + 1;
    let per_level = (10 * (fine - 1)).div_ceil(nt - 1);
    let fd = fd_reference(problem, &FDSettings::new(fine, per_level * (nt - 1), t_end, nt - 1))?;
    let l = problem.length();
    let xs: Vec<f64> = (0..nx).map(|i| l * i as f64 / (nx - 1) as f64).collect();
    let ts: Vec<f64> = (0..nt).map(|j| t_end * j as f64 / (nt - 1) as f64).collect();
    restrict(&fd, &xs, &ts)
}

/// What a grid is compared with.
#[derive(Clone, Copy)]
pub enum Reference<'a> {
    Grid(&'a SolutionGrid),
    Exact(&'a DataFunction),
}

/// `max |a - b|` over the grid of `a`; NaN if any value is NaN.
pub fn max_error(a: &SolutionGrid, b: Reference<'_>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (j, &t) in a.ts.iter().enumerate() {
        for (i, &x) in a.xs.iter().enumerate() {
            let want = match b {
                Reference::Grid(g) => {
                    if g.xs.len() != a.xs.len()
                        || g.ts.len() != a.ts.len()
                        || (g.xs[i] - x).abs() > 1e-9 * (1.0 + x.abs())
                        || (g.ts[j] - t).abs() > 1e-9 * (1.0 + t.abs())
                    {
                        return Err(Error::InvalidArgument("grids do not match".into()));
                    }
                    g.values[j][i]
                }
                Reference::Exact(f) => f.eval(x, t),
            };
            let e = (a.values[j][i] - want).norm();
            if e.is_nan() {
                return Ok(f64::NAN);
            }
            worst = worst.max(e);
        }
    }
    Ok(worst)
}

/// The parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    ThetaMax,
    Beta,
    Eta,
    /// Number of zeros per ray enclosed by the alpha1 contour; mapped to
    /// the `β` whose crossing radius falls midway between consecutive zeros.
    PoleCount,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::ThetaMax => "theta_max",
            SweepParameter::Beta => "beta",
            SweepParameter::Eta => "eta",
            SweepParameter::PoleCount => "pole_count",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "theta_max" => Ok(Self::ThetaMax),
            "beta" => Ok(Self::Beta),
            "eta" => Ok(Self::Eta),
            "pole_count" => Ok(Self::PoleCount),
            other => Err(Error::InvalidArgument(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub max_error: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Columns `parameter,max_error,seconds`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("parameter,max_error,seconds\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{}",
                crate::fmt17(r.value),
                crate::fmt17(r.max_error),
                crate::fmt17(r.seconds)
            );
        }
        s
    }

    /// Whether errors never grow by more than `band` from one row to the
    /// next.
    pub fn non_increasing_within(&self, band: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].max_error <= band * w[0].max_error)
    }
}

/// `β` whose crossing radius `2βπ/3` lies midway between the `n`-th and
/// `(n+1)`-th zero on a pole ray.
pub fn beta_for_pole_count(problem: &ProblemSpec, n: usize) -> Result<f64> {
    let radius = 10.0 * (n as f64 + 2.0) / problem.length();
    let zeros = find_zeros_cached(problem.alpha, problem.length(), radius)?;
    // ray at -2π/3
    let dir = C64::from_polar(1.0, -2.0 * std::f64::consts::PI / 3.0);
    let mut mods: Vec<f64> = zeros
        .zeros
        .iter()
        .filter(|z| {
            let w = z.value / dir;
            w.re > 0.0 && w.im.abs() < 1e-6
        })
        .map(|z| z.value.norm())
        .collect();
    mods.sort_by(f64::total_cmp);
    if mods.len() < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "only {} zeros found on the pole ray, cannot enclose {n}",
            mods.len()
        )));
    }
    let r = if n == 0 { 0.5 * mods[0] } else { 0.5 * (mods[n - 1] + mods[n]) };
    Ok(3.0 * r / (2.0 * std::f64::consts::PI))
}

/// Evaluate `problem` on `xs × ts` once per parameter value and compare with
/// `reference`.
pub fn sweep(
    problem: &ProblemSpec,
    parameter: SweepParameter,
    values: &[f64],
    xs: &[f64],
    ts: &[f64],
    settings: &EvalSettings,
    reference: Reference<'_>,
) -> Result<SweepTable> {
    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let mut s = settings.clone();
        let o: &mut ContourOverrides = &mut s.contour;
        match parameter {
            SweepParameter::ThetaMax => o.theta_max = Some(v),
            SweepParameter::Beta => o.beta = Some(v),
            SweepParameter::Eta => o.eta = Some(v),
            SweepParameter::PoleCount => {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!("pole count must be a whole number, got {v}")));
                }
                o.beta = Some(beta_for_pole_count(problem, v as usize)?);
            }
        }
        let start = Instant::now();
        let grid = evaluate_grid(problem, xs, ts, &s)?;
        let seconds = start.elapsed().as_secs_f64();
        rows.push(SweepRow {
            value: v,
            max_error: max_error(&grid, reference)?,
            seconds,
        });
    }
    Ok(SweepTable { parameter, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_are_exact_on_cubics() {
        let f = |x: f64| 2.0 * x * x * x - x * x + 3.0;
        for (st, at) in [(&CENTRED[..], 5isize), (&ONE_SIDED[..], 5)] {
            let v: f64 = st.iter().map(|&(o, w)| w * f((at + o) as f64)).sum();
            assert!((v - 12.0).abs() < 1e-10);
        }
    }

    #[test]
    fn restrict_rejects_foreign_nodes() {
        let g = SolutionGrid {
            xs: vec![0.0, 0.5, 1.0],
            ts: vec![0.0],
            values: vec![vec![C64::new(1.0, 0.0); 3]],
            diagnostics: Vec::new(),
            failures: vec![None],
        };
        assert!(restrict(&g, &[0.5], &[0.0]).is_ok());
        assert!(restrict(&g, &[0.25], &[0.0]).is_err());
    }
}
