//! Spectral transforms of the problem data.
//!
//! Everything here is evaluated in retarded form: the time transforms are
//! `∫_0^t e^{λ(t-s)} f(s) ds` with `λ = i k^3`, which stays bounded on the
//! deformed contours where the plain `∫_0^t e^{-λ s} f(s) ds` overflows.
//! Spatial transforms use Filon panels, so their cost does not grow with
//! `|k|`. Time-dependent forcing is compressed into a short sum of
//! separable terms `h(x,s) ≈ Σ_r h(x, s_r) β_r(s)` before transforming.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filon::{self, Anchor, ORDER};
use crate::problem::{Arity, DataFunction, ProblemSpec};
use crate::scaled::Scaled;

type C64 = Complex64;
type Coef = [C64; ORDER];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A spectral parameter together with a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub k: C64,
    pub t: f64,
}

impl SpectralPoint {
    pub fn new(k: C64, t: f64) -> Result<Self> {
        if !(k.re.is_finite() && k.im.is_finite() && t.is_finite()) || t < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "spectral point needs finite k and t >= 0, got k={k}, t={t}"
            )));
        }
        Ok(Self { k, t })
    }

    pub fn lambda(&self) -> C64 {
        C64::i() * self.k * self.k * self.k
    }
}

/// Discretisation controls for the data transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Largest time panel before resolution checks.
    pub max_time_panel: f64,
    /// Largest spatial panel before resolution checks.
    pub max_space_panel: f64,
    /// Relative size of the two trailing Legendre coefficients accepted as
    /// resolved.
    pub tail_tol: f64,
    /// Number of discrete directions for half-line rays.
    pub ray_directions: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            max_time_panel: 0.5,
            max_space_panel: 0.5,
            tail_tol: 1e-13,
            ray_directions: 64,
        }
    }
}

const MAX_TIME_PANELS: usize = 1 << 14;
const MAX_SPACE_PANELS: usize = 1 << 10;

/// Uniform panels of `[0, len]`.
#[derive(Debug, Clone, Copy)]
struct Panels {
    n: usize,
    half: f64,
    len: f64,
}

impl Panels {
    fn new(len: f64, n: usize) -> Self {
        Self {
            n,
            half: if n == 0 { 0.0 } else { len / (2.0 * n as f64) },
            len,
        }
    }

    fn left(&self, p: usize) -> f64 {
        if p == 0 {
            0.0
        } else {
            2.0 * self.half * p as f64
        }
    }

    fn right(&self, p: usize) -> f64 {
        if p + 1 == self.n {
            self.len
        } else {
            2.0 * self.half * (p + 1) as f64
        }
    }

    fn node(&self, p: usize, i: usize) -> f64 {
        (2 * p + 1) as f64 * self.half + self.half * filon::nodes()[i]
    }

    fn nodes(&self) -> Vec<f64> {
        (0..self.n)
            .flat_map(|p| (0..ORDER).map(move |i| self.node(p, i)))
            .collect()
    }
}

fn coefficient_panels(values: &[C64]) -> Vec<Coef> {
    values
        .chunks_exact(ORDER)
        .map(|ch| {
            let mut a = [ZERO; ORDER];
            a.copy_from_slice(ch);
            filon::coefficients(&a)
        })
        .collect()
}

/// Are the sampled values resolved panel by panel?
fn resolved(values: &[C64], tol: f64) -> bool {
    let coefs = coefficient_panels(values);
    let gmax = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if gmax == 0.0 {
        return true;
    }
    if !gmax.is_finite() {
        return false;
    }
    coefs
        .iter()
        .all(|c| c[ORDER - 1].norm() + c[ORDER - 2].norm() <= tol * gmax)
}

fn choose_panels<F>(len: f64, start: usize, cap: usize, mut ok: F) -> usize
where
    F: FnMut(&Panels) -> bool,
{
    let mut n = start.max(1);
    loop {
        let p = Panels::new(len, n);
        if ok(&p) || n >= cap {
            return n;
        }
        n *= 2;
    }
}

fn check_finite(v: C64, what: &str) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} evaluated to {v}")))
    }
}

/// Time-side data: Legendre coefficients of each time stream on the panels
/// of `[0, t]`.
#[derive(Debug, Clone)]
struct TimeData {
    t: f64,
    panels: Panels,
    f: Option<(Vec<Coef>, C64)>,
    g: Option<(Vec<Coef>, C64)>,
    /// Weights `β_r(s)` of the separable forcing expansion.
    beta: Vec<Vec<Coef>>,
}

/// Retarded time transforms at one value of `λ`.
#[derive(Debug, Clone)]
pub struct TimeValues {
    pub lambda: C64,
    /// `e^{λ t}`.
    pub exp_lt: Scaled,
    /// `∫_0^t e^{λ(t-s)} f0(s) ds`, optionally with the local part removed.
    pub f: Scaled,
    /// Same for `g0`.
    pub g: Scaled,
    /// Time transforms of the forcing weights.
    pub beta: Vec<Scaled>,
}

impl TimeData {
    /// Retarded transforms of all streams at `λ`.
    fn values(&self, lambda: C64, subtract_local: bool) -> TimeValues {
        let exp_lt = Scaled::exp(lambda * self.t);
        let nb = self.beta.len();
        let mut streams: Vec<&[Coef]> = Vec::with_capacity(2 + nb);
        if let Some((c, _)) = &self.f {
            streams.push(c);
        }
        if let Some((c, _)) = &self.g {
            streams.push(c);
        }
        for b in &self.beta {
            streams.push(b);
        }
        let sums = self.retarded(lambda, &streams);
        let mut it = sums.into_iter();
        let local = |end: C64| {
            if subtract_local && lambda != ZERO {
                Scaled::from_c(end / lambda)
            } else {
                Scaled::ZERO
            }
        };
        let f = match &self.f {
            Some((_, end)) => it.next().unwrap() + local(*end),
            None => Scaled::ZERO,
        };
        let g = match &self.g {
            Some((_, end)) => it.next().unwrap() + local(*end),
            None => Scaled::ZERO,
        };
        let beta = it.collect();
        TimeValues {
            lambda,
            exp_lt,
            f,
            g,
            beta,
        }
    }

    fn retarded(&self, lambda: C64, streams: &[&[Coef]]) -> Vec<Scaled> {
        let n = self.panels.n;
        if n == 0 || streams.is_empty() {
            return vec![Scaled::ZERO; streams.len()];
        }
        let h = self.panels.half;
        let z = -lambda * h;
        let (m, anchor) = filon::moments(z);
        let step = 2.0 * h;
        // distance from the anchored endpoint of panel p to t
        let dist = |p: usize| -> f64 {
            match anchor {
                Anchor::Right => step * (n - 1 - p) as f64,
                Anchor::Left => {
                    if p == 0 {
                        self.t
                    } else {
                        step * (n - p) as f64
                    }
                }
            }
        };
        // visit panels from the largest factor down
        let order: Box<dyn Iterator<Item = usize>> = match anchor {
            Anchor::Right => Box::new((0..n).rev()),
            Anchor::Left => Box::new(0..n),
        };
        let mut acc = vec![ZERO; streams.len()];
        let mut base = f64::NAN;
        for p in order {
            let e = lambda * dist(p);
            if base.is_nan() {
                base = e.re;
            }
            let rel = e.re - base;
            if rel < -745.0 {
                break;
            }
            let factor = C64::from_polar(rel.exp() * h, e.im);
            for (a, s) in acc.iter_mut().zip(streams) {
                *a += factor * filon::contract(&s[p], &m);
            }
        }
        acc.into_iter().map(|a| Scaled::new(a, base)).collect()
    }
}

/// Spatial transforms of a set of functions on `[0, L]`.
#[derive(Debug, Clone)]
struct IntervalSpace {
    panels: Panels,
    funcs: Vec<Vec<Coef>>,
}

impl IntervalSpace {
    /// `∫_0^L e^{-iκx} f_j(x) dx` for every function.
    fn transforms(&self, kappa: C64) -> Vec<Scaled> {
        let n = self.panels.n;
        let h = self.panels.half;
        let z = C64::new(0.0, -1.0) * kappa * h;
        let (m, anchor) = filon::moments(z);
        let mut out = Vec::with_capacity(self.funcs.len());
        // exponent -iκx at the anchored endpoints
        let expo: Vec<C64> = (0..n)
            .map(|p| {
                let x = match anchor {
                    Anchor::Right => self.panels.right(p),
                    Anchor::Left => self.panels.left(p),
                };
                C64::new(0.0, -1.0) * kappa * x
            })
            .collect();
        let base = expo.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        for f in &self.funcs {
            let mut acc = ZERO;
            for p in 0..n {
                let rel = expo[p].re - base;
                if rel < -745.0 {
                    continue;
                }
                acc += C64::from_polar(rel.exp() * h, expo[p].im) * filon::contract(&f[p], &m);
            }
            out.push(Scaled::new(acc, base));
        }
        out
    }
}

type XFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// Half-line transforms `∫_0^∞ e^{-iκx} f(x) dx`, continued analytically
/// by integrating along a ray `x = r e^{iφ}` on which `e^{-(iκ+c)x}`
/// decays, with the data's own decay `e^{-cx}` factored out.
struct HalfLineSpace {
    c: f64,
    dirs: usize,
    funcs: Vec<XFn>,
    cache: Vec<OnceLock<Box<Coef>>>,
}

const RAY_PANELS: usize = 256;

impl std::fmt::Debug for HalfLineSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HalfLineSpace")
            .field("c", &self.c)
            .field("dirs", &self.dirs)
            .field("funcs", &self.funcs.len())
            .finish()
    }
}

impl HalfLineSpace {
    fn new(c: f64, dirs: usize, funcs: Vec<XFn>) -> Self {
        let cache = (0..funcs.len() * dirs * RAY_PANELS)
            .map(|_| OnceLock::new())
            .collect();
        Self {
            c,
            dirs,
            funcs,
            cache,
        }
    }

    fn coef(&self, j: usize, d: usize, p: usize) -> &Coef {
        let slot = &self.cache[(j * self.dirs + d) * RAY_PANELS + p];
        slot.get_or_init(|| {
            let w = C64::from_polar(1.0, self.direction(d));
            let f = &self.funcs[j];
            let vals: Coef = std::array::from_fn(|i| {
                let r = p as f64 + 0.5 + 0.5 * filon::nodes()[i];
                let x = w * r;
                f(x) * (x * self.c).exp()
            });
            Box::new(filon::coefficients(&vals))
        })
    }

    fn direction(&self, d: usize) -> f64 {
        let a = 2.0 * PI * d as f64 / self.dirs as f64;
        if a > PI {
            a - 2.0 * PI
        } else {
            a
        }
    }

    fn transforms(&self, kappa: C64) -> Vec<Scaled> {
        let a = C64::i() * kappa + self.c;
        let step = 2.0 * PI / self.dirs as f64;
        let phi = -a.arg();
        let d = ((phi.rem_euclid(2.0 * PI) / step).round() as usize) % self.dirs;
        let w = C64::from_polar(1.0, self.direction(d));
        let b = a * w;
        let r_max = 45.0 / b.re + 5.0;
        let np = (r_max.ceil() as usize).clamp(1, RAY_PANELS);
        let z = -b * 0.5;
        let (m, anchor) = filon::moments(z);
        (0..self.funcs.len())
            .map(|j| {
                let mut acc = ZERO;
                for p in 0..np {
                    let r = match anchor {
                        Anchor::Right => (p + 1) as f64,
                        Anchor::Left => p as f64,
                    };
                    let e = -b * r;
                    if e.re < -745.0 {
                        break;
                    }
                    acc += e.exp() * 0.5 * filon::contract(self.coef(j, d, p), &m);
                }
                Scaled::from_c(acc * w)
            })
            .collect()
    }
}

#[derive(Debug)]
enum Space {
    Interval(IntervalSpace),
    HalfLine(HalfLineSpace),
}

impl Space {
    fn transforms(&self, kappa: C64) -> Vec<Scaled> {
        match self {
            Space::Interval(s) => s.transforms(kappa),
            Space::HalfLine(s) => s.transforms(kappa),
        }
    }
}

/// Spatial transforms at one spectral point.
#[derive(Debug, Clone)]
pub struct SpaceValues {
    /// `q̂0(κ)`.
    pub q0: Scaled,
    /// Transforms of the forcing columns `h(·, s_r)`.
    pub h: Vec<Scaled>,
}

/// All data transforms of one problem at one time `t`.
///
/// Construction samples the data once; the per-`k` evaluations are then
/// cheap and can run concurrently.
#[derive(Debug)]
pub struct SpectralData {
    t: f64,
    length: Option<f64>,
    time: TimeData,
    space: Space,
    has_q0: bool,
}

/// Estimated exponential decay rate of `f` on the positive real axis, or
/// infinity when it vanishes to machine precision by `x = 30`.
fn decay_rate(f: &dyn Fn(f64) -> C64) -> f64 {
    let window = |x0: f64| {
        (0..8)
            .map(|i| f(x0 + i as f64 * 0.125).norm())
            .fold(0.0, f64::max)
    };
    let m10 = window(10.0);
    let m30 = window(30.0);
    if m30 == 0.0 || m10 == 0.0 {
        return f64::INFINITY;
    }
    -(m30.ln() - m10.ln()) / 20.0
}

/// Column skeleton of a sampled matrix: `H ≈ H[:, J] β`.
fn skeleton(h: &DMatrix<C64>, tol: f64) -> (Vec<usize>, DMatrix<C64>) {
    let (rows, cols) = h.shape();
    let norm_max = h
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if norm_max == 0.0 || cols == 0 {
        return (Vec::new(), DMatrix::zeros(0, cols));
    }
    let mut res = h.clone();
    let mut picked = Vec::new();
    while picked.len() < cols.min(rows) {
        let (j, nrm) = res
            .column_iter()
            .enumerate()
            .map(|(j, c)| (j, c.norm()))
            .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if nrm <= tol * norm_max {
            break;
        }
        picked.push(j);
        let q = res.column(j) / C64::new(nrm, 0.0);
        for mut col in res.column_iter_mut() {
            let proj = q.dotc(&col);
            col.axpy(-proj, &q, C64::new(1.0, 0.0));
        }
    }
    let hj = h.select_columns(&picked);
    let svd = hj.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let beta = svd.solve(h, smax * 1e-15);
    match beta {
        Ok(beta) => {
            let err = (&hj * &beta - h).camax();
            let scale = h.camax();
            if err <= 1e-11 * scale {
                return (picked, beta);
            }
            let all: Vec<usize> = (0..cols).collect();
            (all, DMatrix::identity(cols, cols))
        }
        Err(_) => {
            let all: Vec<usize> = (0..cols).collect();
            (all, DMatrix::identity(cols, cols))
        }
    }
}

impl SpectralData {
    pub fn new(problem: &ProblemSpec, t: f64) -> Result<Self> {
        Self::with_options(problem, t, &SpectralOptions::default())
    }

    pub fn with_options(problem: &ProblemSpec, t: f64, opts: &SpectralOptions) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
        }
        let length = if problem.is_half_line() {
            None
        } else {
            Some(problem.length())
        };
        let tol = opts.tail_tol;
        let f0 = (!problem.f0.is_zero()).then_some(&problem.f0);
        let g0 = (!problem.g0.is_zero() && length.is_some()).then_some(&problem.g0);
        let h = problem.forcing();
        let q0 = (!problem.q0.is_zero()).then_some(&problem.q0);

        // time partition
        let probes: Vec<f64> = match length {
            Some(l) => vec![0.0, 0.31 * l, 0.5 * l, 0.77 * l, l],
            None => vec![0.0, 0.5, 2.0, 5.0],
        };
        let n_t = if t == 0.0 {
            0
        } else {
            let start = (t / opts.max_time_panel).ceil() as usize;
            choose_panels(t, start, MAX_TIME_PANELS, |p| {
                let s = p.nodes();
                let mut ok = true;
                for f in [f0, g0].into_iter().flatten() {
                    let v: Vec<C64> = s.iter().map(|&s| f.at(s)).collect();
                    ok &= resolved(&v, tol);
                }
                if let Some(h) = h {
                    for &x in &probes {
                        let v: Vec<C64> = s.iter().map(|&s| h.eval(x, s)).collect();
                        ok &= resolved(&v, tol);
                    }
                }
                ok
            })
        };
        let tp = Panels::new(t, n_t);
        let s_nodes = tp.nodes();
        let stream = |f: &DataFunction| -> Result<(Vec<Coef>, C64)> {
            let v = s_nodes
                .iter()
                .map(|&s| check_finite(f.at(s), "boundary data"))
                .collect::<Result<Vec<_>>>()?;
            Ok((coefficient_panels(&v), check_finite(f.at(t), "boundary data")?))
        };
        let f_stream = f0.map(stream).transpose()?;
        let g_stream = g0.map(stream).transpose()?;

        // forcing samples for the separable expansion; columns index time nodes
        let (space, beta) = match length {
            Some(l) => {
                let s_probe: Vec<f64> = if s_nodes.len() <= 64 {
                    s_nodes.clone()
                } else {
                    let stride = s_nodes.len() as f64 / 64.0;
                    (0..64).map(|i| s_nodes[(i as f64 * stride) as usize]).collect()
                };
                let start = (l / opts.max_space_panel).ceil() as usize;
                let n_x = choose_panels(l, start, MAX_SPACE_PANELS, |p| {
                    let xs = p.nodes();
                    let mut ok = true;
                    if let Some(q) = q0 {
                        let v: Vec<C64> = xs.iter().map(|&x| q.at(x)).collect();
                        ok &= resolved(&v, tol);
                    }
                    if let Some(h) = h {
                        for &s in &s_probe {
                            let v: Vec<C64> = xs.iter().map(|&x| h.eval(x, s)).collect();
                            ok &= resolved(&v, tol);
                        }
                    }
                    ok
                });
                let xp = Panels::new(l, n_x);
                let xs = xp.nodes();
                let mut funcs = Vec::new();
                if let Some(q) = q0 {
                    let v = xs
                        .iter()
                        .map(|&x| check_finite(q.at(x), "initial data"))
                        .collect::<Result<Vec<_>>>()?;
                    funcs.push(coefficient_panels(&v));
                }
                let mut beta = Vec::new();
                if let (Some(h), true) = (h, !s_nodes.is_empty()) {
                    let mat = sample_matrix(h, &xs, &s_nodes)?;
                    let (cols, b) = skeleton(&mat, 1e-13);
                    for &j in &cols {
                        let v: Vec<C64> = mat.column(j).iter().copied().collect();
                        funcs.push(coefficient_panels(&v));
                    }
                    for r in 0..cols.len() {
                        let v: Vec<C64> = b.row(r).iter().copied().collect();
                        beta.push(coefficient_panels(&v));
                    }
                }
                (
                    Space::Interval(IntervalSpace { panels: xp, funcs }),
                    beta,
                )
            }
            None => {
                let mut funcs: Vec<XFn> = Vec::new();
                let mut rates = Vec::new();
                if let Some(q) = q0 {
                    let q = q.clone();
                    rates.push(decay_rate(&|x| q.at(x)));
                    funcs.push(Arc::new(move |x| q.eval_c(x, ZERO)));
                }
                let mut beta = Vec::new();
                if let (Some(h), true) = (h, !s_nodes.is_empty()) {
                    let xs = Panels::new(40.0, 40).nodes();
                    let mat = sample_matrix(h, &xs, &s_nodes)?;
                    let (cols, b) = skeleton(&mat, 1e-13);
                    for &j in &cols {
                        let s = s_nodes[j];
                        let hc = h.clone();
                        rates.push(decay_rate(&|x| hc.eval(x, s)));
                        let hc = h.clone();
                        funcs.push(Arc::new(move |x| hc.eval_c(x, C64::new(s, 0.0))));
                    }
                    for r in 0..cols.len() {
                        let v: Vec<C64> = b.row(r).iter().copied().collect();
                        beta.push(coefficient_panels(&v));
                    }
                }
                let c = rates.iter().copied().fold(f64::INFINITY, f64::min);
                if c <= 0.05 {
                    return Err(Error::InvalidProblem(format!(
                        "half-line data must decay exponentially (estimated rate {c:.3})"
                    )));
                }
                let space = if c.is_finite() || funcs.is_empty() {
                    Space::HalfLine(HalfLineSpace::new(
                        if c.is_finite() { c } else { 1.0 },
                        opts.ray_directions,
                        funcs,
                    ))
                } else {
                    truncated_half_line(funcs, opts)?
                };
                (space, beta)
            }
        };
        Ok(Self {
            t,
            length,
            time: TimeData {
                t,
                panels: tp,
                f: f_stream,
                g: g_stream,
                beta,
            },
            space,
            has_q0: q0.is_some(),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Interval length, `None` on the half-line.
    pub fn length(&self) -> Option<f64> {
        self.length
    }

    /// Number of separable terms used for the forcing.
    pub fn forcing_rank(&self) -> usize {
        self.time.beta.len()
    }

    /// Number of time panels on `[0, t]`.
    pub fn time_panels(&self) -> usize {
        self.time.panels.n
    }

    /// Retarded time transforms at `λ`. With `subtract_local` the terms
    /// `-f0(t)/λ`, `-g0(t)/λ` are removed from the boundary transforms.
    pub fn time_values(&self, lambda: C64, subtract_local: bool) -> TimeValues {
        self.time.values(lambda, subtract_local)
    }

    pub fn space_values(&self, kappa: C64) -> SpaceValues {
        let mut all = self.space.transforms(kappa).into_iter();
        let q0 = if self.has_q0 {
            all.next().unwrap()
        } else {
            Scaled::ZERO
        };
        SpaceValues {
            q0,
            h: all.collect(),
        }
    }

    /// `H_ret(κ,t) = ∫_0^t e^{λ(t-s)} ĥ(κ,s) ds` from precomputed pieces.
    pub fn forcing_ret(&self, tv: &TimeValues, sv: &SpaceValues) -> Scaled {
        Scaled::sum(sv.h.iter().zip(&tv.beta).map(|(a, b)| *a * *b))
    }

    /// `e^{λt} N(κ,t)` for the interval:
    /// `e^{λt} q̂0 - κ² F + e^{-iκL} κ² G + H`, all retarded.
    pub fn n_ret(&self, kappa: C64, tv: &TimeValues, sv: &SpaceValues) -> Scaled {
        let k2 = Scaled::from_c(kappa * kappa);
        let mut terms = vec![tv.exp_lt * sv.q0, -(k2 * tv.f), self.forcing_ret(tv, sv)];
        if let Some(l) = self.length {
            terms.push(Scaled::exp(C64::new(0.0, -1.0) * kappa * l) * k2 * tv.g);
        }
        Scaled::sum(terms)
    }

    /// `e^{λt} q̂0(κ) + H_ret(κ,t)`, the half-line building block.
    pub fn q_ret(&self, tv: &TimeValues, sv: &SpaceValues) -> Scaled {
        tv.exp_lt * sv.q0 + self.forcing_ret(tv, sv)
    }

    /// Convenience: `e^{λt} N(κ, t)` at a single point.
    pub fn n_ret_at(&self, kappa: C64, subtract_local: bool) -> Scaled {
        let lambda = C64::i() * kappa * kappa * kappa;
        let tv = self.time_values(lambda, subtract_local);
        let sv = self.space_values(kappa);
        self.n_ret(kappa, &tv, &sv)
    }
}

fn sample_matrix(h: &DataFunction, xs: &[f64], ss: &[f64]) -> Result<DMatrix<C64>> {
    let mut m = DMatrix::zeros(xs.len(), ss.len());
    for (j, &s) in ss.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            m[(i, j)] = check_finite(h.eval(x, s), "forcing")?;
        }
    }
    Ok(m)
}

/// Real-axis truncation for data that vanish faster than any exponential.
fn truncated_half_line(funcs: Vec<XFn>, opts: &SpectralOptions) -> Result<Space> {
    let mut x_end: f64 = 1.0;
    for f in &funcs {
        let peak = (0..2000)
            .map(|i| f(C64::new(i as f64 * 0.5, 0.0)).norm())
            .fold(0.0, f64::max);
        let last = (0..2000)
            .rev()
            .find(|&i| f(C64::new(i as f64 * 0.5, 0.0)).norm() >= 1e-14 * peak)
            .unwrap_or(0);
        x_end = x_end.max(last as f64 * 0.5 + 1.0);
    }
    let start = (x_end / opts.max_space_panel).ceil() as usize;
    let n = choose_panels(x_end, start, MAX_SPACE_PANELS, |p| {
        let xs = p.nodes();
        funcs.iter().all(|f| {
            let v: Vec<C64> = xs.iter().map(|&x| f(C64::new(x, 0.0))).collect();
            resolved(&v, opts.tail_tol)
        })
    });
    let panels = Panels::new(x_end, n);
    let xs = panels.nodes();
    let coefs = funcs
        .iter()
        .map(|f| {
            let v: Vec<C64> = xs.iter().map(|&x| f(C64::new(x, 0.0))).collect();
            coefficient_panels(&v)
        })
        .collect();
    Ok(Space::Interval(IntervalSpace {
        panels,
        funcs: coefs,
    }))
}

fn only_initial(problem: &ProblemSpec) -> Result<ProblemSpec> {
    rebuild(problem, Some(problem.q0.clone()), None, None, None)
}

fn rebuild(
    problem: &ProblemSpec,
    q0: Option<DataFunction>,
    f0: Option<DataFunction>,
    g0: Option<DataFunction>,
    h: Option<DataFunction>,
) -> Result<ProblemSpec> {
    let q0 = q0.unwrap_or_else(|| DataFunction::zero(Arity::X));
    let f0 = f0.unwrap_or_else(|| DataFunction::zero(Arity::T));
    let g0 = g0.unwrap_or_else(|| DataFunction::zero(Arity::T));
    if problem.is_half_line() {
        ProblemSpec::half_line(q0, f0, h)
    } else {
        ProblemSpec::interval(problem.length(), problem.alpha, q0, f0, g0, h)
    }
}

fn pseudo_problem(length: f64, f0: Option<DataFunction>, h: Option<DataFunction>) -> Result<ProblemSpec> {
    let q0 = DataFunction::zero(Arity::X);
    let f0 = f0.unwrap_or_else(|| DataFunction::zero(Arity::T));
    if length.is_infinite() {
        ProblemSpec::half_line(q0, f0, h)
    } else {
        ProblemSpec::interval(length, 0.0, q0, f0, DataFunction::zero(Arity::T), h)
    }
}

fn finite_or_overflow(v: C64, what: &str) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!(
            "{what} is not representable in plain form; use the retarded form"
        )))
    }
}

/// Finite Fourier transform `q̂0(k) = ∫_0^L e^{-ikx} q0(x) dx` (half-line:
/// upper limit infinity).
pub fn hat_q0(problem: &ProblemSpec, k: C64) -> Result<C64> {
    SpectralPoint::new(k, 0.0)?;
    let p = only_initial(problem)?;
    let sd = SpectralData::new(&p, 0.0)?;
    finite_or_overflow(sd.space_values(k).q0.to_c(), "q0 transform")
}

/// Time transform of boundary data: `∫_0^t e^{-ik³s} f(s) ds`, or with
/// `retarded` the bounded form `∫_0^t e^{ik³(t-s)} f(s) ds`.
pub fn time_transform(f: &DataFunction, k: C64, t: f64, retarded: bool) -> Result<C64> {
    let pt = SpectralPoint::new(k, t)?;
    let p = pseudo_problem(1.0, Some(f.clone()), None)?;
    let sd = SpectralData::new(&p, t)?;
    let tv = sd.time_values(pt.lambda(), false);
    let v = if retarded { tv.f } else { tv.f / tv.exp_lt };
    finite_or_overflow(v.to_c(), "time transform")
}

/// Forcing transform `∫_0^t ∫_0^L e^{-ikx - ik³s} h(x,s) dx ds` (retarded:
/// times `e^{ik³t}`). `length = ∞` selects the half-line.
pub fn forcing_transform_h(h: &DataFunction, k: C64, t: f64, length: f64, retarded: bool) -> Result<C64> {
    let pt = SpectralPoint::new(k, t)?;
    let p = pseudo_problem(length, None, Some(h.clone()))?;
    let sd = SpectralData::new(&p, t)?;
    let tv = sd.time_values(pt.lambda(), false);
    let sv = sd.space_values(k);
    let v = sd.forcing_ret(&tv, &sv);
    let v = if retarded { v } else { v / tv.exp_lt };
    finite_or_overflow(v.to_c(), "forcing transform")
}

/// `N(k,t) = q̂0 - k² f̃0 + e^{-ikL} k² g̃0 + H` in scaled form.
pub fn n_data(problem: &ProblemSpec, k: C64, t: f64) -> Result<Scaled> {
    let pt = SpectralPoint::new(k, t)?;
    Ok(n_data_retarded(problem, k, t)? / Scaled::exp(pt.lambda() * t))
}

/// `e^{ik³t} N(k,t)`, the form used on deformed contours.
pub fn n_data_retarded(problem: &ProblemSpec, k: C64, t: f64) -> Result<Scaled> {
    SpectralPoint::new(k, t)?;
    if problem.is_half_line() {
        return Err(Error::InvalidArgument(
            "N(k,t) is defined for interval problems".into(),
        ));
    }
    let sd = SpectralData::new(problem, t)?;
    Ok(sd.n_ret_at(k, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skeleton_finds_separable_rank() {
        let h = DataFunction::parse("2*pi*(2*x - x^2)*cos(2*pi*t) + x*sin(t)", Arity::XT).unwrap();
        let xs = Panels::new(1.0, 2).nodes();
        let ss = Panels::new(1.0, 4).nodes();
        let m = sample_matrix(&h, &xs, &ss).unwrap();
        let (cols, beta) = skeleton(&m, 1e-13);
        assert_eq!(cols.len(), 2);
        let err = (m.select_columns(&cols) * beta - &m).camax();
        assert!(err < 1e-12);
    }

    #[test]
    fn time_panels_resolve_boundary_data() {
        let f = DataFunction::parse("sin(2*pi*t)", Arity::T).unwrap();
        let p = pseudo_problem(1.0, Some(f), None).unwrap();
        let sd = SpectralData::new(&p, 1.0).unwrap();
        assert!(sd.time_panels() >= 2 && sd.time_panels() <= 8);
    }

    #[test]
    fn local_part_is_removed_for_large_k() {
        // ∫_0^t e^{λ(t-s)} ds = (e^{λt} - 1)/λ, whose non-local part e^{λt}/λ
        // is negligible where Re λ << 0
        let f = DataFunction::parse("1", Arity::T).unwrap();
        let p = pseudo_problem(1.0, Some(f), None).unwrap();
        let sd = SpectralData::new(&p, 0.5).unwrap();
        let k = C64::from_polar(8.0, PI / 6.0);
        let lambda = C64::i() * k * k * k;
        assert!(lambda.re < -100.0);
        let full = sd.time_values(lambda, false).f.to_c();
        let sub = sd.time_values(lambda, true).f.to_c();
        assert!((full + 1.0 / lambda).norm() < 1e-15, "{full}");
        assert!(sub.norm() < 1e-17, "{sub}");
    }
}
