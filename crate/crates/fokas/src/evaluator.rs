//! Evaluation of the contour-integral representation of `q(x, t)`.
//!
//! On the interval
//!
//! ```text
//! 2π q = Σ_{j=1,2} ∫_{k_j} e^{ikx} e^{λt}ζ⁺/Δ dk + ∫_{k_3} e^{ik(x-L)} e^{λt}ζ⁻/Δ dk
//! ```
//!
//! and on the half-line
//!
//! ```text
//! 2π q = ∫ e^{ikx} [Q(k) - 3k²F + τ Q(τk) + τ² Q(τ²k)] dk,   Q = e^{λt}q̂0 + H.
//! ```
//!
//! The three interval branches are rotations of one curve, so a single
//! θ-rule serves all of them and the data transforms at `k₃, τk₃, τ²k₃` are
//! computed once per node.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::characteristic::{delta_prime, find_zeros_cached, relative_size, tau_pow, zeta_from_parts, OrbitExponentials};
use crate::contours::{select_contour_with, zero_radius, Branch, Contour, ContourOverrides, Family};
use crate::error::{Error, Result};
use crate::filon::gauss_legendre;
use crate::problem::ProblemSpec;
use crate::scaled::Scaled;
use crate::spectral::{SpectralData, SpectralOptions};

type C64 = Complex64;

/// Panels beyond this count abort the evaluation.
const MAX_PANELS: usize = 1 << 21;
/// Relative `|Δ|` below which a node counts as touching a pole.
const POLE_WARNING: f64 = 1e-8;

/// Controls for the θ-quadrature and the contour choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub contour: ContourOverrides,
    /// Width of the base θ-panels.
    pub panel_width: f64,
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Largest phase change of any resolved oscillation across one panel.
    pub phase_budget: f64,
    /// Oscillating terms whose amplitude is below this are not resolved.
    pub amplitude_floor: f64,
    /// Remove the local boundary part and add back its closed form
    /// (interval, `|α| < 1`).
    pub subtract_boundary: bool,
    /// Halve every panel until a probe value changes by less than
    /// `refine_tol` (at most three times).
    pub refine_check: bool,
    pub refine_tol: f64,
    /// Add the residues of the zeros the alpha1 contour passes on its
    /// growth side (between the crossing radius and its reach).
    pub residues: bool,
    pub spectral: SpectralOptions,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            contour: ContourOverrides::default(),
            panel_width: 0.25,
            order: 16,
            phase_budget: 20.0,
            amplitude_floor: 1e-20,
            subtract_boundary: true,
            refine_check: false,
            refine_tol: 1e-8,
            residues: true,
            spectral: SpectralOptions::default(),
        }
    }
}

impl EvalSettings {
    fn validate(&self) -> Result<()> {
        let ok = self.panel_width > 0.0
            && self.panel_width.is_finite()
            && self.order >= 2
            && self.order <= 256
            && self.phase_budget > 0.0
            && self.amplitude_floor > 0.0
            && self.amplitude_floor < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid evaluator settings: {self:?}")))
        }
    }
}

/// A composite Gauss–Legendre rule in θ.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub panels: Vec<(f64, f64)>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    /// Order-`order` Gauss–Legendre on every panel between consecutive
    /// breakpoints.
    pub fn from_panels(panels: Vec<(f64, f64)>, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument(format!("rule order must be at least 2, got {order}")));
        }
        let (u, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(panels.len() * order);
        let mut weights = Vec::with_capacity(panels.len() * order);
        for &(a, b) in &panels {
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            for (ui, wi) in u.iter().zip(&w) {
                nodes.push(m + h * ui);
                weights.push(h * wi);
            }
        }
        Ok(Self {
            panels,
            nodes,
            weights,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> C64>(&self, f: F) -> C64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }

    /// Every panel split in two.
    pub fn halved(&self) -> Self {
        let panels = self
            .panels
            .iter()
            .flat_map(|&(a, b)| {
                let m = 0.5 * (a + b);
                [(a, m), (m, b)]
            })
            .collect();
        Self::from_panels(panels, self.order).expect("order already checked")
    }
}

/// `panels` equal panels on `[-θ_max, θ_max]`.
pub fn quadrature_rule(theta_max: f64, panels: usize, order: usize) -> Result<QuadratureRule> {
    if !(theta_max > 0.0 && theta_max.is_finite()) || panels == 0 {
        return Err(Error::InvalidArgument(format!(
            "need theta_max > 0 and at least one panel, got {theta_max}, {panels}"
        )));
    }
    let h = 2.0 * theta_max / panels as f64;
    let p = (0..panels)
        .map(|i| {
            let a = -theta_max + h * i as f64;
            let b = if i + 1 == panels { theta_max } else { a + h };
            (a, b)
        })
        .collect();
    QuadratureRule::from_panels(p, order)
}

/// Equal panels on `[-θ_max, θ_max]`, as many as needed to keep a phase
/// rate of `omega` below `budget` radians per panel.
pub fn quadrature_rule_for_frequency(
    theta_max: f64,
    omega: f64,
    budget: f64,
    order: usize,
) -> Result<QuadratureRule> {
    let n = ((2.0 * theta_max * omega.abs() / budget).ceil() as usize).max(1);
    quadrature_rule(theta_max, n, order)
}

/// What the θ-rule must resolve.
#[derive(Debug, Clone, Copy)]
struct Resolution {
    t: f64,
    /// Interval length, or the largest requested `x` on the half-line.
    xspan: f64,
    half_line: bool,
    budget: f64,
    ln_floor: f64,
}

impl Resolution {
    fn needs_split(&self, c: &Contour, a: f64, b: f64) -> bool {
        let w = b - a;
        (0..5).any(|i| {
            let th = a + w * i as f64 / 4.0;
            let k = c.base(th);
            let dk = c.dbase(th).norm();
            let span = if self.half_line {
                // e^{ikx} decays like e^{-x Im k}
                self.xspan.min(self.ln_floor / k.im.max(1e-300))
            } else {
                self.xspan
            };
            if dk * span * w > self.budget {
                return true;
            }
            let im3 = (k * k * k).im;
            let k2 = k.norm_sqr();
            // e^{λt} has modulus e^{-t Im k³}
            im3 * self.t < self.ln_floor && 3.0 * k2 * dk * self.t * w > self.budget
        })
    }
}

/// Breakpoints graded geometrically towards the point of the contour
/// nearest to each zero.
fn pole_breakpoints(c: &Contour, poles: &[(f64, f64)], width: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &(th, dist) in poles {
        let s0 = dist / c.dbase(th).norm();
        if !(s0 > 0.0) {
            continue;
        }
        out.push(th);
        let mut s = s0;
        while s < width {
            out.push(th - s);
            out.push(th + s);
            s *= 2.0;
        }
    }
    out
}

fn build_rule(
    c: &Contour,
    res: &Resolution,
    poles: &[(f64, f64)],
    settings: &EvalSettings,
) -> Result<QuadratureRule> {
    let tm = c.theta_max;
    let n0 = ((2.0 * tm / settings.panel_width).ceil() as usize).max(1);
    let mut bps: Vec<f64> = (0..=n0).map(|i| -tm + 2.0 * tm * i as f64 / n0 as f64).collect();
    bps.extend(
        pole_breakpoints(c, poles, settings.panel_width)
            .into_iter()
            .filter(|&b| b > -tm && b < tm),
    );
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let mut panels = Vec::new();
    let mut stack: Vec<(f64, f64)> = bps.windows(2).rev().map(|p| (p[0], p[1])).collect();
    while let Some((a, b)) = stack.pop() {
        if b - a > 1e-10 && res.needs_split(c, a, b) {
            let m = 0.5 * (a + b);
            stack.push((m, b));
            stack.push((a, m));
        } else {
            panels.push((a, b));
        }
        if panels.len() + stack.len() > MAX_PANELS {
            return Err(Error::Numerical(format!(
                "θ-rule needs more than {MAX_PANELS} panels at t={}",
                res.t
            )));
        }
    }
    QuadratureRule::from_panels(panels, settings.order)
}

/// One term `c e^{ik(x - x0)}` of the discretised integral.
#[derive(Debug, Clone, Copy)]
struct Term {
    ik: C64,
    x0: f64,
    ln_c: f64,
    arg_c: f64,
}

impl Term {
    fn new(k: C64, x0: f64, c: Scaled) -> Option<Self> {
        if c.is_zero() {
            return None;
        }
        Some(Self {
            ik: C64::i() * k,
            x0,
            ln_c: c.ln_abs(),
            arg_c: c.arg(),
        })
    }

    fn exponent(&self, x: f64) -> C64 {
        C64::new(self.ln_c, self.arg_c) + self.ik * (x - self.x0)
    }
}

/// Diagnostics for one time level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub contour: String,
    pub panels: usize,
    pub nodes: usize,
    pub near_pole_nodes: usize,
    /// Residue terms added for passed poles.
    pub residues: usize,
    pub time_panels: usize,
    pub forcing_rank: usize,
    pub seconds: f64,
    pub warnings: Vec<String>,
}

/// Discretised integrand at one time, ready to be summed at any `x`.
struct Discretised {
    terms: Vec<Term>,
    diag: Diagnostics,
}

fn check_settings_and_time(problem: &ProblemSpec, t: f64, s: &EvalSettings) -> Result<()> {
    s.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    if problem.is_half_line() && problem.alpha != 0.0 {
        return Err(Error::InvalidProblem("alpha is not used on the half-line".into()));
    }
    Ok(())
}

fn describe(c: &Contour) -> String {
    match c.family {
        Family::HalfLineHyperbola => format!("halfline-hyperbola theta_max={}", c.theta_max),
        Family::IntervalHyperbola { eta, shift } => {
            format!("interval-hyperbola eta={eta} shift={shift} theta_max={}", c.theta_max)
        }
        Family::IntervalAlpha1 { gamma, beta } => {
            format!("interval-alpha1 gamma={gamma} beta={beta} theta_max={}", c.theta_max)
        }
    }
}

fn interval_set(contours: &[Contour]) -> Result<Contour> {
    let base = contours
        .iter()
        .find(|c| c.branch == Branch::K3)
        .ok_or_else(|| Error::InvalidArgument("interval evaluation needs the k3 branch".into()))?;
    let complete = [Branch::K1, Branch::K2, Branch::K3].iter().all(|b| {
        contours
            .iter()
            .any(|c| c.branch == *b && c.family == base.family && c.theta_max == base.theta_max)
    });
    if contours.len() != 3 || !complete {
        return Err(Error::InvalidArgument(
            "interval evaluation needs the three branches k1, k2, k3 of one contour".into(),
        ));
    }
    Ok(*base)
}

fn subtracting(problem: &ProblemSpec, s: &EvalSettings) -> bool {
    s.subtract_boundary && !problem.is_half_line() && problem.alpha.abs() < 1.0
}

/// Nearest contour points of the zeros of `Δ` that lie close enough to
/// need graded panels.
fn nearby_poles(problem: &ProblemSpec, base: &Contour) -> Result<Vec<(f64, f64)>> {
    let zeros = find_zeros_cached(problem.alpha, problem.length(), zero_radius(base))?;
    let (lo, hi) = base.asymptotes();
    let mut out = Vec::new();
    for z in &zeros.zeros {
        // a zero far from both rays bounding the k3 sector cannot be close
        let near_ray = [lo, hi].iter().any(|&a| {
            let w = z.value * C64::from_polar(1.0, -a);
            w.re > -1.0 && w.im.abs() < 1.5
        });
        if !near_ray {
            continue;
        }
        let (th, d) = base.nearest(z.value);
        if d < 1.0 {
            out.push((th, d));
        }
    }
    Ok(out)
}

/// Per-branch values at the orbit of `k₃`: `(k, e^{λt}ζ, x0, Δ terms)`.
struct BranchValue {
    r: usize,
    k: C64,
    zeta: Scaled,
    x0: f64,
    delta_terms: [Scaled; 6],
}

fn branch_values(sd: &SpectralData, k3: C64, length: f64, alpha: f64, subtract: bool) -> [BranchValue; 3] {
    let lambda = C64::i() * k3 * k3 * k3;
    let tv = sd.time_values(lambda, subtract);
    let n: [Scaled; 3] = std::array::from_fn(|m| {
        let kappa = tau_pow(m) * k3;
        let sv = sd.space_values(kappa);
        sd.n_ret(kappa, &tv, &sv)
    });
    let ex = OrbitExponentials::new(k3, length);
    // k1 = τ²k3 and k2 = τk3 carry ζ⁺, k3 carries ζ⁻
    [(Branch::K1, 2usize), (Branch::K2, 1), (Branch::K3, 0)].map(|(branch, r)| {
        let k = tau_pow(r) * k3;
        let dt = ex.delta_terms(r, alpha);
        let d = Scaled::sum(dt);
        let c = ex.coefficients(r, alpha);
        let nb = [n[r], n[(r + 1) % 3], n[(r + 2) % 3]];
        let (zp, zm) = zeta_from_parts(k, d, &c, tv.f, tv.g, nb);
        let (zeta, x0) = if branch == Branch::K3 { (zm, length) } else { (zp, 0.0) };
        BranchValue {
            r,
            k,
            zeta,
            x0,
            delta_terms: dt,
        }
    })
}

fn discretise_interval(
    problem: &ProblemSpec,
    sd: &SpectralData,
    base: &Contour,
    rule: &QuadratureRule,
    subtract: bool,
) -> Result<(Vec<Term>, usize)> {
    let length = problem.length();
    let alpha = problem.alpha;
    let order = rule.order;
    let chunks: Vec<(Vec<Term>, usize, bool)> = rule
        .panels
        .par_iter()
        .enumerate()
        .map(|(p, _)| {
            let mut terms = Vec::with_capacity(3 * order);
            let mut near = 0;
            let mut bad = false;
            for i in p * order..(p + 1) * order {
                let th = rule.nodes[i];
                let w = rule.weights[i];
                let k3 = base.base(th);
                let dk3 = base.dbase(th);
                for b in branch_values(sd, k3, length, alpha, subtract) {
                    if relative_size(&b.delta_terms) < POLE_WARNING {
                        near += 1;
                    }
                    let d = Scaled::sum(b.delta_terms);
                    let v = (b.zeta / d) * (tau_pow(b.r) * dk3 * (w / (2.0 * PI)));
                    if !v.is_finite() {
                        bad = true;
                        continue;
                    }
                    terms.extend(Term::new(b.k, b.x0, v));
                }
            }
            (terms, near, bad)
        })
        .collect();
    if chunks.iter().any(|c| c.2) {
        return Err(Error::Numerical(format!(
            "non-finite integrand on the contour at t={}",
            sd.t()
        )));
    }
    let near = chunks.iter().map(|c| c.1).sum();
    Ok((chunks.into_iter().flat_map(|c| c.0).collect(), near))
}

/// Zeros on the pole lines that the contour leaves on its growth side
/// (beyond the crossing radius of the alpha1 family).
fn passed_poles(problem: &ProblemSpec, base: &Contour) -> Result<Vec<C64>> {
    let zeros = find_zeros_cached(problem.alpha, problem.length(), zero_radius(base))?;
    let (lo, hi) = base.asymptotes();
    let reach = base.base(base.theta_max).norm().min(base.base(-base.theta_max).norm());
    Ok(zeros
        .zeros
        .iter()
        .filter(|z| z.line_distance < 1e-6 && z.value.norm() < reach)
        .filter(|z| {
            [lo, hi].iter().any(|&a| {
                let w = z.value * C64::from_polar(1.0, -a);
                w.re > 0.0 && w.im.abs() < 1e-6
            })
        })
        .filter(|z| base.winding(z.value) == 0)
        .map(|z| z.value)
        .collect())
}

/// `i e^{ik(x-x0)} e^{λt}ζ/Δ'` at each passed pole and its rotations.
fn residue_terms(problem: &ProblemSpec, sd: &SpectralData, poles: &[C64], subtract: bool) -> Result<Vec<Term>> {
    let length = problem.length();
    let alpha = problem.alpha;
    let mut out = Vec::new();
    for &z in poles {
        for b in branch_values(sd, z, length, alpha, subtract) {
            let dp = delta_prime(b.k, length, alpha);
            let v = (b.zeta / dp) * C64::i();
            if !v.is_finite() {
                return Err(Error::Numerical(format!("non-finite residue at k = {}", b.k)));
            }
            out.extend(Term::new(b.k, b.x0, v));
        }
    }
    Ok(out)
}

fn discretise_halfline(sd: &SpectralData, c: &Contour, rule: &QuadratureRule) -> Result<Vec<Term>> {
    let order = rule.order;
    let t2 = tau_pow(2);
    let t1 = tau_pow(1);
    let chunks: Vec<(Vec<Term>, bool)> = rule
        .panels
        .par_iter()
        .enumerate()
        .map(|(p, _)| {
            let mut terms = Vec::with_capacity(order);
            let mut bad = false;
            for i in p * order..(p + 1) * order {
                let th = rule.nodes[i];
                let w = rule.weights[i];
                let k = c.map(th);
                let dk = c.dmap(th);
                let lambda = C64::i() * k * k * k;
                let tv = sd.time_values(lambda, false);
                let q: [Scaled; 3] = std::array::from_fn(|m| {
                    let sv = sd.space_values(tau_pow(m) * k);
                    sd.q_ret(&tv, &sv)
                });
                let v = Scaled::sum([
                    q[0],
                    -(tv.f * (3.0 * k * k)),
                    q[1] * t1,
                    q[2] * t2,
                ]) * (dk * (w / (2.0 * PI)));
                if !v.is_finite() {
                    bad = true;
                    continue;
                }
                terms.extend(Term::new(k, 0.0, v));
            }
            (terms, bad)
        })
        .collect();
    if chunks.iter().any(|c| c.1) {
        return Err(Error::Numerical(format!(
            "non-finite integrand on the contour at t={}",
            sd.t()
        )));
    }
    Ok(chunks.into_iter().flat_map(|c| c.0).collect())
}

/// Terms below `e^{-80}` of the largest cannot affect the sum.
fn prune(terms: &mut Vec<Term>) {
    let max = terms.iter().map(|t| t.ln_c).fold(f64::NEG_INFINITY, f64::max);
    terms.retain(|t| t.ln_c > max - 80.0);
}

/// `Σ c e^{ik(x - x0)}` at every `x`.
fn sum_terms(terms: &[Term], xs: &[f64]) -> Vec<C64> {
    const CHUNK: usize = 4096;
    let n = xs.len();
    if n == 0 {
        return Vec::new();
    }
    let uniform = n >= 3 && {
        let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        dx > 0.0
            && xs
                .iter()
                .enumerate()
                .all(|(i, &x)| (x - (xs[0] + dx * i as f64)).abs() <= 1e-12 * (1.0 + x.abs()))
    };
    let partial: Vec<Vec<C64>> = terms
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![C64::new(0.0, 0.0); n];
            for t in chunk {
                let e0 = t.exponent(xs[0]);
                let e1 = t.exponent(xs[n - 1]);
                if e0.re < -700.0 && e1.re < -700.0 {
                    continue;
                }
                if uniform && e0.re.min(e1.re) > -600.0 && e0.re.max(e1.re) < 600.0 {
                    let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
                    let r = (t.ik * dx).exp();
                    let mut v = e0.exp();
                    for a in acc.iter_mut() {
                        *a += v;
                        v *= r;
                    }
                } else {
                    for (a, &x) in acc.iter_mut().zip(xs) {
                        let e = t.exponent(x);
                        if e.re > -700.0 {
                            *a += e.exp();
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for p in partial {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// The closed-form contribution of the subtracted local boundary part.
fn local_part(problem: &ProblemSpec, x: f64, t: f64) -> C64 {
    let l = problem.length();
    let a = problem.alpha;
    let f = problem.f0.at(t);
    let g = problem.g0.at(t);
    let phi = (2.0 * x / l + (a - 1.0) * x * x / (l * l)) / (1.0 + a);
    f + (g - f) * phi
}

fn discretise(
    problem: &ProblemSpec,
    t: f64,
    contours: &[Contour],
    xmax: f64,
    s: &EvalSettings,
) -> Result<Discretised> {
    let start = Instant::now();
    let sd = SpectralData::with_options(problem, t, &s.spectral)?;
    let ln_floor = -s.amplitude_floor.ln();
    let mut diag = Diagnostics {
        t,
        time_panels: sd.time_panels(),
        forcing_rank: sd.forcing_rank(),
        ..Default::default()
    };
    let (terms, rule) = if problem.is_half_line() {
        let c = contours
            .first()
            .copied()
            .filter(|c| c.branch == Branch::HalfLine)
            .ok_or_else(|| Error::InvalidArgument("half-line evaluation needs the half-line contour".into()))?;
        diag.contour = describe(&c);
        let res = Resolution {
            t,
            xspan: xmax.max(1.0),
            half_line: true,
            budget: s.phase_budget,
            ln_floor,
        };
        let rule = build_rule(&c, &res, &[], s)?;
        (discretise_halfline(&sd, &c, &rule)?, rule)
    } else {
        let base = interval_set(contours)?;
        diag.contour = describe(&base);
        let poles = nearby_poles(problem, &base)?;
        let res = Resolution {
            t,
            xspan: problem.length(),
            half_line: false,
            budget: s.phase_budget,
            ln_floor,
        };
        let rule = build_rule(&base, &res, &poles, s)?;
        let (mut terms, near) = discretise_interval(problem, &sd, &base, &rule, subtracting(problem, s))?;
        if s.residues && matches!(base.family, Family::IntervalAlpha1 { .. }) {
            let passed = passed_poles(problem, &base)?;
            diag.residues = 3 * passed.len();
            terms.extend(residue_terms(problem, &sd, &passed, subtracting(problem, s))?);
        }
        diag.near_pole_nodes = near;
        if near > 0 {
            diag.warnings.push(format!(
                "{near} quadrature node(s) within relative |Δ| < {POLE_WARNING:e} of a zero"
            ));
        }
        (terms, rule)
    };
    diag.panels = rule.panels.len();
    diag.nodes = rule.len();
    let mut terms = terms;
    prune(&mut terms);
    diag.seconds = start.elapsed().as_secs_f64();
    Ok(Discretised { terms, diag })
}

fn check_xs(problem: &ProblemSpec, xs: &[f64]) -> Result<()> {
    let l = problem.length();
    for &x in xs {
        if !(x.is_finite() && x >= 0.0 && x <= l) {
            return Err(Error::InvalidArgument(format!(
                "x = {x} lies outside the domain [0, {l}]"
            )));
        }
    }
    Ok(())
}

/// Values at the points `xs` for one time, with diagnostics.
///
/// `t = 0` returns `q0` and boundary points return the prescribed
/// Dirichlet data; the integral representation is used everywhere else.
pub fn evaluate_points_with(
    problem: &ProblemSpec,
    xs: &[f64],
    t: f64,
    contours: &[Contour],
    s: &EvalSettings,
) -> Result<(Vec<C64>, Diagnostics)> {
    check_settings_and_time(problem, t, s)?;
    check_xs(problem, xs)?;
    if t == 0.0 {
        let d = Diagnostics {
            t,
            contour: "none (initial data)".into(),
            ..Default::default()
        };
        return Ok((xs.iter().map(|&x| problem.q0.at(x)).collect(), d));
    }
    let xmax = xs.iter().copied().fold(0.0, f64::max);
    let mut disc = discretise(problem, t, contours, xmax, s)?;
    let mut values = sum_terms(&disc.terms, xs);
    if s.refine_check && !xs.is_empty() {
        let probe = [xs[xs.len() / 2]];
        let mut current = sum_terms(&disc.terms, &probe)[0];
        for _ in 0..3 {
            let finer = EvalSettings {
                panel_width: s.panel_width / 2.0,
                phase_budget: s.phase_budget / 2.0,
                refine_check: false,
                ..*s
            };
            let d2 = discretise(problem, t, contours, xmax, &finer)?;
            let v2 = sum_terms(&d2.terms, &probe)[0];
            let diff = (v2 - current).norm();
            disc = d2;
            values = sum_terms(&disc.terms, xs);
            if diff <= s.refine_tol {
                break;
            }
            current = v2;
        }
    }
    if subtracting(problem, s) {
        for (v, &x) in values.iter_mut().zip(xs) {
            *v += local_part(problem, x, t);
        }
    }
    let l = problem.length();
    for (v, &x) in values.iter_mut().zip(xs) {
        if x == 0.0 {
            *v = problem.f0.at(t);
        } else if x == l {
            *v = problem.g0.at(t);
        }
    }
    Ok((values, disc.diag))
}

/// `q(x, t)` on the interval along the given branches `k1, k2, k3`.
pub fn evaluate_interval(
    problem: &ProblemSpec,
    x: f64,
    t: f64,
    contours: &[Contour],
    s: &EvalSettings,
) -> Result<C64> {
    if problem.is_half_line() {
        return Err(Error::InvalidArgument("problem is posed on the half-line".into()));
    }
    Ok(evaluate_points_with(problem, &[x], t, contours, s)?.0[0])
}

/// `q(x, t)` on the half-line along `contour`.
pub fn evaluate_halfline(
    problem: &ProblemSpec,
    x: f64,
    t: f64,
    contour: &Contour,
    s: &EvalSettings,
) -> Result<C64> {
    if !problem.is_half_line() {
        return Err(Error::InvalidArgument("problem is posed on an interval".into()));
    }
    Ok(evaluate_points_with(problem, &[x], t, std::slice::from_ref(contour), s)?.0[0])
}

/// Values at `xs` for one time, with the default contour for that time.
pub fn evaluate_points(problem: &ProblemSpec, xs: &[f64], t: f64, s: &EvalSettings) -> Result<Vec<C64>> {
    let contours = select_contour_with(problem, t, &s.contour)?;
    Ok(evaluate_points_with(problem, xs, t, &contours, s)?.0)
}

/// `q(x, t)` with the default contour.
pub fn evaluate(problem: &ProblemSpec, x: f64, t: f64, s: &EvalSettings) -> Result<C64> {
    Ok(evaluate_points(problem, &[x], t, s)?[0])
}

/// Solution values on a tensor grid, `values[j][i] = q(xs[i], ts[j])`.
#[derive(Debug, Clone)]
pub struct SolutionGrid {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub values: Vec<Vec<C64>>,
    pub diagnostics: Vec<Diagnostics>,
    /// Failure message per time level, if that level is NaN-filled.
    pub failures: Vec<Option<String>>,
}

impl SolutionGrid {
    pub fn all_finite(&self) -> bool {
        self.values
            .iter()
            .flatten()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Rows `x,t,re,im` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,t,re,im\n");
        for (t, row) in self.ts.iter().zip(&self.values) {
            for (x, v) in self.xs.iter().zip(row) {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    crate::fmt17(*x),
                    crate::fmt17(*t),
                    crate::fmt17(v.re),
                    crate::fmt17(v.im)
                );
            }
        }
        s
    }

    /// Real part in gnuplot's `nonuniform matrix` text layout: the first
    /// row is the count of x values followed by the xs, then one row per t.
    pub fn to_gnuplot_matrix(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{}", self.xs.len());
        for x in &self.xs {
            let _ = write!(s, " {}", crate::fmt17(*x));
        }
        s.push('\n');
        for (t, row) in self.ts.iter().zip(&self.values) {
            let _ = write!(s, "{}", crate::fmt17(*t));
            for v in row {
                let _ = write!(s, " {}", crate::fmt17(v.re));
            }
            s.push('\n');
        }
        s
    }

    /// `Re q` in the layout of `values`.
    pub fn realpart(&self) -> Vec<Vec<f64>> {
        self.values.iter().map(|row| row.iter().map(|v| v.re).collect()).collect()
    }

    /// `∫|q|² dx` at time level `j`.
    pub fn energy(&self, j: usize) -> Result<f64> {
        let row = self
            .values
            .get(j)
            .ok_or_else(|| Error::InvalidArgument(format!("no time level {j}")))?;
        energy(&self.xs, row)
    }

    /// `∫|q|² dx` for every time level.
    pub fn energy_series(&self) -> Result<Vec<(f64, f64)>> {
        self.ts
            .iter()
            .zip(&self.values)
            .map(|(&t, row)| Ok((t, energy(&self.xs, row)?)))
            .collect()
    }
}

/// Evaluate on a grid. A time level that fails is filled with NaN and its
/// error recorded; invalid arguments fail the whole call.
pub fn evaluate_grid(problem: &ProblemSpec, xs: &[f64], ts: &[f64], s: &EvalSettings) -> Result<SolutionGrid> {
    s.validate()?;
    check_xs(problem, xs)?;
    for &t in ts {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
        }
    }
    let mut values = Vec::with_capacity(ts.len());
    let mut diagnostics = Vec::with_capacity(ts.len());
    let mut failures = Vec::with_capacity(ts.len());
    for &t in ts {
        let out = select_contour_with(problem, t, &s.contour)
            .and_then(|c| evaluate_points_with(problem, xs, t, &c, s));
        match out {
            Ok((v, d)) => {
                values.push(v);
                diagnostics.push(d);
                failures.push(None);
            }
            Err(e) => {
                values.push(vec![C64::new(f64::NAN, f64::NAN); xs.len()]);
                diagnostics.push(Diagnostics {
                    t,
                    ..Default::default()
                });
                failures.push(Some(e.to_string()));
            }
        }
    }
    Ok(SolutionGrid {
        xs: xs.to_vec(),
        ts: ts.to_vec(),
        values,
        diagnostics,
        failures,
    })
}

/// `∫|q|² dx` by composite Simpson on a uniform grid (a 3/8 panel closes an
/// odd number of intervals).
pub fn energy(xs: &[f64], values: &[C64]) -> Result<f64> {
    let n = xs.len();
    if n != values.len() {
        return Err(Error::InvalidArgument("xs and values differ in length".into()));
    }
    if n < 16 {
        return Err(Error::InvalidArgument(format!("energy needs at least 16 grid points, got {n}")));
    }
    let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    let uniform = h > 0.0
        && xs
            .iter()
            .enumerate()
            .all(|(i, &x)| (x - (xs[0] + h * i as f64)).abs() <= 1e-9 * h);
    if !uniform {
        return Err(Error::InvalidArgument("energy needs a uniform x grid".into()));
    }
    let f: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
    Ok(simpson(&f, h))
}

/// Composite Simpson on equally spaced samples, `f.len() >= 4`.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let intervals = f.len() - 1;
    let (even_end, tail) = if intervals % 2 == 0 {
        (intervals, 0.0)
    } else {
        let e = intervals - 3;
        let t = 3.0 * h / 8.0 * (f[e] + 3.0 * f[e + 1] + 3.0 * f[e + 2] + f[e + 3]);
        (e, t)
    };
    let mut s = 0.0;
    for i in (0..even_end).step_by(2) {
        s += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    }
    s + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_oscillation() {
        let r = quadrature_rule_for_frequency(5.0, 10.0, 12.0, 16).unwrap();
        let got = r.integrate(|x| C64::new((10.0 * x).cos(), 0.0));
        let want = 2.0 * (50.0f64).sin() / 10.0;
        assert!((got.re - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn simpson_handles_odd_interval_counts() {
        for n in [4usize, 5, 6, 11, 12] {
            let h = 1.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(3)).collect();
            assert!((simpson(&f, h) - 0.25).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn recursion_and_direct_sums_agree() {
        let terms: Vec<Term> = (0..50)
            .map(|j| {
                let k = C64::new(j as f64 * 0.7 - 10.0, 0.3 + 0.05 * j as f64);
                Term::new(k, 0.0, Scaled::from_c(C64::new(1.0, j as f64))).unwrap()
            })
            .collect();
        let xs: Vec<f64> = (0..21).map(|i| i as f64 * 0.05).collect();
        let a = sum_terms(&terms, &xs);
        let mut xs2 = xs.clone();
        xs2[3] += 1e-3;
        let b = sum_terms(&terms, &xs2);
        for i in (0..21).filter(|&i| i != 3) {
            assert!((a[i] - b[i]).norm() < 1e-11 * a[i].norm().max(1.0));
        }
    }
}
