//! Deformed integration contours `θ ↦ k(θ)` and their validation against
//! the zeros of `Δ`.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::characteristic::{line_distance, tau_pow, ZeroTable};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

type C64 = Complex64;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Contour families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `k(θ) = i sin(π/6 - iθ)`.
    HalfLineHyperbola,
    /// `k₃(θ) = -iη sin(π/3 - iθ) - i·shift`; `shift = 0` is the plain
    /// hyperbola, a positive shift moves the ends further into the decay
    /// sector.
    IntervalHyperbola { eta: f64, shift: f64 },
    /// The tanh-based map that runs on the growth side of the pole lines
    /// for `|θ| < βπ/3` and on the decay side beyond.
    IntervalAlpha1 { gamma: f64, beta: f64 },
}

/// Which rotated copy of the base curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// The half-line contour.
    HalfLine,
    /// `k₁ = τ² k₃`, carries `ζ⁺`.
    K1,
    /// `k₂ = τ k₃`, carries `ζ⁺`.
    K2,
    /// `k₃`, carries `ζ⁻`.
    K3,
}

impl Branch {
    /// Power of `τ` relating this branch to the base curve.
    pub fn rotation(self) -> usize {
        match self {
            Branch::HalfLine | Branch::K3 => 0,
            Branch::K2 => 1,
            Branch::K1 => 2,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Branch::K1 => 1,
            Branch::K2 => 2,
            Branch::K3 | Branch::HalfLine => 3,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::HalfLine => write!(f, "halfline"),
            Branch::K1 => write!(f, "k1"),
            Branch::K2 => write!(f, "k2"),
            Branch::K3 => write!(f, "k3"),
        }
    }
}

/// A truncated contour `θ ∈ [-θ_max, θ_max] ↦ k(θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    pub family: Family,
    pub branch: Branch,
    pub theta_max: f64,
}

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

impl Contour {
    /// The base curve (`k₃`, or the half-line hyperbola).
    pub fn base(&self, theta: f64) -> C64 {
        match self.family {
            Family::HalfLineHyperbola => {
                C64::i() * (C64::new(PI / 6.0, -theta)).sin()
            }
            Family::IntervalHyperbola { eta, shift } => {
                C64::new(0.0, -eta) * C64::new(PI / 3.0, -theta).sin() - C64::new(0.0, shift)
            }
            Family::IntervalAlpha1 { gamma, beta } => {
                let th = theta;
                let b = beta * PI / 3.0;
                let t1 = (0.5 - 2.0 * th).tanh() + (0.5 + 2.0 * th).tanh();
                let re = -th;
                let im = gamma * ((b - th).tanh() + (b + th).tanh() - 1.0) - t1
                    + SQRT3 / 2.0 * th * (2.0 * th).tanh() * (t1 - 2.0);
                C64::new(re, im)
            }
        }
    }

    /// Derivative of the base curve.
    pub fn dbase(&self, theta: f64) -> C64 {
        match self.family {
            Family::HalfLineHyperbola => C64::new(PI / 6.0, -theta).cos(),
            Family::IntervalHyperbola { eta, .. } => -eta * C64::new(PI / 3.0, -theta).cos(),
            Family::IntervalAlpha1 { gamma, beta } => {
                let th = theta;
                let b = beta * PI / 3.0;
                let t1 = (0.5 - 2.0 * th).tanh() + (0.5 + 2.0 * th).tanh();
                let dt1 = -2.0 * sech2(0.5 - 2.0 * th) + 2.0 * sech2(0.5 + 2.0 * th);
                let th2 = (2.0 * th).tanh();
                let im = gamma * (-sech2(b - th) + sech2(b + th)) - dt1
                    + SQRT3 / 2.0
                        * ((th2 + 2.0 * th * sech2(2.0 * th)) * (t1 - 2.0) + th * th2 * dt1);
                C64::new(-1.0, im)
            }
        }
    }

    pub fn map(&self, theta: f64) -> C64 {
        tau_pow(self.branch.rotation()) * self.base(theta)
    }

    pub fn dmap(&self, theta: f64) -> C64 {
        tau_pow(self.branch.rotation()) * self.dbase(theta)
    }

    /// Polyline samples as CSV with columns `theta,re,im`.
    pub fn polyline_csv(&self, samples: usize) -> String {
        let n = samples.max(2);
        let mut s = String::from("theta,re,im\n");
        for i in 0..n {
            let th = -self.theta_max + 2.0 * self.theta_max * i as f64 / (n - 1) as f64;
            let k = self.map(th);
            let _ = writeln!(s, "{},{},{}", crate::fmt17(th), crate::fmt17(k.re), crate::fmt17(k.im));
        }
        s
    }

    /// Asymptotic directions of the ends `θ → -∞` and `θ → +∞`.
    pub fn asymptotes(&self) -> (f64, f64) {
        let (lo, hi) = match self.family {
            Family::HalfLineHyperbola => (5.0 * PI / 6.0, PI / 6.0),
            _ => (-PI / 3.0, -2.0 * PI / 3.0),
        };
        let rot = 2.0 * PI / 3.0 * self.branch.rotation() as f64;
        (wrap(lo + rot), wrap(hi + rot))
    }

    /// Nearest point of the truncated contour to `z`: `(θ, distance)`.
    pub fn nearest(&self, z: C64) -> (f64, f64) {
        let n = (2.0 * self.theta_max / 0.01).ceil() as usize;
        let h = 2.0 * self.theta_max / n as f64;
        let mut best = (0.0, f64::INFINITY);
        for i in 0..=n {
            let th = -self.theta_max + h * i as f64;
            let d = (self.map(th) - z).norm();
            if d < best.1 {
                best = (th, d);
            }
        }
        // golden-section refinement on the bracketing interval
        let (mut a, mut b) = (
            (best.0 - h).max(-self.theta_max),
            (best.0 + h).min(self.theta_max),
        );
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let f = |th: f64| (self.map(th) - z).norm();
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        for _ in 0..80 {
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - g * (b - a);
            d = a + g * (b - a);
        }
        let th = 0.5 * (a + b);
        let dist = f(th);
        if dist < best.1 {
            (th, dist)
        } else {
            best
        }
    }

    /// Winding number about `z` of the contour closed by a circular arc
    /// through the sector between its ends. One means `z` lies on the
    /// decay side of the contour.
    pub fn winding(&self, z: C64) -> i64 {
        let mut total = 0.0;
        let mut prev_th = -self.theta_max;
        let mut prev = self.map(prev_th) - z;
        let base_step: f64 = 0.02;
        while prev_th < self.theta_max {
            let mut step = base_step.min(self.theta_max - prev_th);
            loop {
                let th = prev_th + step;
                let cur = self.map(th) - z;
                let d = wrap(cur.arg() - prev.arg());
                if d.abs() < PI / 4.0 || step < 1e-12 {
                    total += d;
                    prev_th = th;
                    prev = cur;
                    break;
                }
                step *= 0.5;
            }
        }
        // arc from the end back to the start, the short way round
        let end = self.map(self.theta_max);
        let start = self.map(-self.theta_max);
        let r = end.norm().max(start.norm());
        let a0 = end.arg();
        let span = wrap(start.arg() - a0);
        let mut pts = vec![end];
        let m = 2000;
        for i in 0..=m {
            pts.push(C64::from_polar(r, a0 + span * i as f64 / m as f64));
        }
        pts.push(start);
        for w in pts.windows(2) {
            total += wrap((w[1] - z).arg() - (w[0] - z).arg());
        }
        (total / (2.0 * PI)).round() as i64
    }

    /// Radius at which the alpha1 curve passes from the growth side of the
    /// pole lines to the decay side (0 for the other families).
    pub fn crossing_radius(&self) -> f64 {
        let Family::IntervalAlpha1 { .. } = self.family else {
            return 0.0;
        };
        // signed offset from the ray at -2π/3 (θ > 0 end), negative on the D side
        let side = |th: f64| (self.base(th) * tau_pow(1)).im;
        let mut prev = side(1.0);
        let mut th = 1.0;
        while th < self.theta_max {
            let next = th + 0.01;
            let s = side(next);
            if prev < 0.0 && s >= 0.0 {
                let (mut a, mut b) = (th, next);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if side(m) < 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                return self.base(0.5 * (a + b)).norm();
            }
            prev = s;
            th = next;
        }
        0.0
    }
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// The half-line hyperbola with the default truncation.
pub fn contour_halfline() -> Contour {
    Contour {
        family: Family::HalfLineHyperbola,
        branch: Branch::HalfLine,
        theta_max: 50.0,
    }
}

fn branch_of(branch: usize) -> Result<Branch> {
    match branch {
        1 => Ok(Branch::K1),
        2 => Ok(Branch::K2),
        3 => Ok(Branch::K3),
        _ => Err(Error::InvalidArgument(format!("branch must be 1, 2 or 3, got {branch}"))),
    }
}

/// Interval hyperbola branch `k_branch` with parameter `eta` (no shift).
pub fn contour_interval(eta: f64, branch: usize) -> Result<Contour> {
    contour_interval_shifted(eta, 0.0, branch)
}

/// Interval hyperbola with an inward shift.
pub fn contour_interval_shifted(eta: f64, shift: f64, branch: usize) -> Result<Contour> {
    if !(eta > 0.0 && eta.is_finite()) || !(shift >= 0.0 && shift.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive and shift non-negative, got eta={eta}, shift={shift}"
        )));
    }
    Ok(Contour {
        family: Family::IntervalHyperbola { eta, shift },
        branch: branch_of(branch)?,
        theta_max: 8.0,
    })
}

/// The tanh-based contour used when `α = 1`.
pub fn contour_alpha1(gamma: f64, beta: f64, branch: usize) -> Result<Contour> {
    if !(gamma > 0.0 && gamma.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma and beta must be positive, got gamma={gamma}, beta={beta}"
        )));
    }
    Ok(Contour {
        family: Family::IntervalAlpha1 { gamma, beta },
        branch: branch_of(branch)?,
        theta_max: 50.0,
    })
}

/// `γ = min(1/(200 t^{1/3}), 1/2)`.
pub fn gamma_rule(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.5;
    }
    (1.0 / (200.0 * t.cbrt())).min(0.5)
}

/// Clearance required between a contour and any zero of `Δ`.
pub fn clearance(contour: &Contour) -> f64 {
    match contour.family {
        // zeros near the crossing radius can sit well inside the offset γ
        Family::IntervalAlpha1 { gamma, .. } => (gamma / 20.0).min(1e-2),
        _ => 1e-2,
    }
}

/// Outcome of [`validate_contour`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub branch: Branch,
    /// Smallest distance from the contour to a zero, and that zero.
    pub min_distance: f64,
    pub nearest_zero: Option<C64>,
    pub clearance: f64,
    /// Zeros whose modulus is below the contour's reach.
    pub checked: usize,
    /// Zeros on the pole lines that sit on the decay side of the contour,
    /// i.e. whose residues the deformation picks up, per ray index.
    pub enclosed_per_ray: [usize; 3],
    /// Zeros on the pole lines below the crossing radius, per ray index.
    pub expected_enclosed_per_ray: [usize; 3],
    pub crossing_radius: f64,
    /// Zeros on the wrong side of the contour.
    pub wrong_side: Vec<C64>,
    /// Angle between the ends at `±θ_max` and the asymptotic rays.
    pub asymptote_deviation: (f64, f64),
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.min_distance > self.clearance && self.wrong_side.is_empty()
    }

    pub fn enclosed(&self) -> usize {
        self.enclosed_per_ray.iter().sum()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "branch: {}", self.branch)?;
        writeln!(
            f,
            "min_distance: {:.6e} (clearance {:.3e}){}",
            self.min_distance,
            self.clearance,
            match self.nearest_zero {
                Some(z) => format!(" nearest zero {:.6}{:+.6}i", z.re, z.im),
                None => String::new(),
            }
        )?;
        writeln!(f, "zeros_checked: {}", self.checked)?;
        writeln!(f, "crossing_radius: {:.6}", self.crossing_radius)?;
        writeln!(f, "enclosed_per_ray: {:?}", self.enclosed_per_ray)?;
        writeln!(f, "expected_enclosed_per_ray: {:?}", self.expected_enclosed_per_ray)?;
        writeln!(
            f,
            "asymptote_deviation: {:.3e} {:.3e}",
            self.asymptote_deviation.0, self.asymptote_deviation.1
        )?;
        writeln!(f, "wrong_side: {}", self.wrong_side.len())?;
        writeln!(f, "status: {}", if self.passed() { "ok" } else { "FAILED" })
    }
}

const ON_LINE: f64 = 1e-6;

/// Check a contour against the zeros of `Δ`: clearance, side of every
/// zero within reach, and the count of enclosed poles.
pub fn validate_contour(contour: &Contour, zeros: &ZeroTable, alpha: f64) -> Result<ValidationReport> {
    let reach = contour
        .map(contour.theta_max)
        .norm()
        .max(contour.map(-contour.theta_max).norm());
    let crossing = contour.crossing_radius();
    let mut min_distance = f64::INFINITY;
    let mut nearest_zero = None;
    let mut checked = 0;
    let mut enclosed = [0usize; 3];
    let mut expected = [0usize; 3];
    let mut wrong = Vec::new();
    let alpha1 = matches!(contour.family, Family::IntervalAlpha1 { .. });
    let (lo, hi) = contour.asymptotes();
    let mid = lo + 0.5 * wrap(hi - lo);
    let half = 0.5 * wrap(hi - lo).abs();
    for z in &zeros.zeros {
        if z.value.norm() >= reach {
            continue;
        }
        // only zeros in the sector between the asymptotes (or on its rays)
        let ang = wrap(z.value.arg() - mid).abs();
        let on_ray = [lo, hi]
            .iter()
            .any(|&a| (z.value * C64::from_polar(1.0, -a)).im.abs() < ON_LINE && (z.value * C64::from_polar(1.0, -a)).re > 0.0);
        if ang > half + 1e-9 && !on_ray {
            continue;
        }
        checked += 1;
        let (_, d) = contour.nearest(z.value);
        if d < min_distance {
            min_distance = d;
            nearest_zero = Some(z.value);
        }
        let w = contour.winding(z.value).abs();
        let on_line = z.line_distance < ON_LINE;
        if on_line && w == 1 {
            enclosed[z.ray] += 1;
        }
        if alpha1 {
            if on_line && z.value.norm() < crossing {
                expected[z.ray] += 1;
            }
        } else if w != 1 && alpha.abs() < 1.0 {
            wrong.push(z.value);
        }
    }
    let dev = (
        wrap(contour.map(-contour.theta_max).arg() - lo).abs(),
        wrap(contour.map(contour.theta_max).arg() - hi).abs(),
    );
    Ok(ValidationReport {
        branch: contour.branch,
        min_distance,
        nearest_zero,
        clearance: clearance(contour),
        checked,
        enclosed_per_ray: enclosed,
        expected_enclosed_per_ray: expected,
        crossing_radius: crossing,
        wrong_side: wrong,
        asymptote_deviation: dev,
    })
}

/// Like [`validate_contour`], but a failed check is an error.
pub fn require_valid(contour: &Contour, zeros: &ZeroTable, alpha: f64) -> Result<ValidationReport> {
    let r = validate_contour(contour, zeros, alpha)?;
    if r.min_distance <= r.clearance {
        return Err(Error::Validation(format!(
            "contour {} passes within {:.3e} of the zero {:?} (clearance {:.1e})",
            contour.branch, r.min_distance, r.nearest_zero, r.clearance
        )));
    }
    if !r.wrong_side.is_empty() {
        return Err(Error::Validation(format!(
            "contour {} leaves {} zero(s) on the wrong side: {:?}",
            contour.branch,
            r.wrong_side.len(),
            r.wrong_side
        )));
    }
    Ok(r)
}

/// Distance used when looking for zeros relevant to a contour.
pub fn zero_radius(contour: &Contour) -> f64 {
    let reach = contour
        .map(contour.theta_max)
        .norm()
        .max(contour.map(-contour.theta_max).norm());
    match contour.family {
        // beyond this the zeros sit at their asymptotic offset from the lines
        Family::IntervalHyperbola { .. } => reach.min(40.0),
        _ => reach,
    }
}

/// Overrides for [`select_contour_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ContourOverrides {
    pub theta_max: Option<f64>,
    pub eta: Option<f64>,
    pub shift: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
}

/// Default contours for `problem` at time `t`.
pub fn select_contour(problem: &ProblemSpec, t: f64) -> Result<Vec<Contour>> {
    select_contour_with(problem, t, &ContourOverrides::default())
}

/// Contours for `problem` at time `t` with optional parameter overrides.
///
/// For `|α| < 1` the inward shift starts at 0.5 and is halved until the
/// contour validates against the zeros of `Δ`.
pub fn select_contour_with(problem: &ProblemSpec, t: f64, o: &ContourOverrides) -> Result<Vec<Contour>> {
    if problem.is_half_line() {
        let mut c = contour_halfline();
        if let Some(m) = o.theta_max {
            c.theta_max = m;
        }
        return Ok(vec![c]);
    }
    let alpha = problem.alpha;
    let length = problem.length();
    let set = |family: Family, theta_max: f64| -> Vec<Contour> {
        [Branch::K1, Branch::K2, Branch::K3]
            .into_iter()
            .map(|branch| Contour {
                family,
                branch,
                theta_max,
            })
            .collect()
    };
    if alpha.abs() < 1.0 {
        let eta = o.eta.unwrap_or(0.5);
        let theta_max = o.theta_max.unwrap_or(8.0);
        if let Some(shift) = o.shift {
            return Ok(set(Family::IntervalHyperbola { eta, shift }, theta_max));
        }
        let mut shift = 0.5;
        for _ in 0..12 {
            let cs = set(Family::IntervalHyperbola { eta, shift }, theta_max);
            let zeros = crate::characteristic::find_zeros_cached(alpha, length, zero_radius(&cs[2]))?;
            if validate_contour(&cs[2], &zeros, alpha)?.passed() {
                return Ok(cs);
            }
            shift *= 0.5;
        }
        return Ok(set(Family::IntervalHyperbola { eta, shift: 0.0 }, theta_max));
    }
    let gamma = o.gamma.unwrap_or_else(|| gamma_rule(t));
    let beta = o.beta.unwrap_or(9.0);
    let theta_max = o.theta_max.unwrap_or(50.0);
    Ok(set(Family::IntervalAlpha1 { gamma, beta }, theta_max))
}

/// The distance to the nearest pole line, for annotating zeros in reports.
pub fn pole_line_distance(z: C64) -> f64 {
    (0..3).map(|j| line_distance(z, j)).fold(f64::INFINITY, f64::min)
}
