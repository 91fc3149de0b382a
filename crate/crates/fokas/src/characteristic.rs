//! The characteristic function `Δ(k)`, the coefficients `A_j`, `B_j`, the
//! spectral functions `ζ±`, and a zero finder for `Δ`.

use std::f64::consts::PI;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::scaled::Scaled;
use crate::spectral::{SpaceValues, SpectralData, TimeValues};

type C64 = Complex64;

/// `τ = e^{2πi/3}`.
pub fn tau() -> C64 {
    C64::new(-0.5, 3f64.sqrt() / 2.0)
}

/// `τ^m` for `m = 0, 1, 2` (reduced mod 3).
pub fn tau_pow(m: usize) -> C64 {
    match m % 3 {
        0 => C64::new(1.0, 0.0),
        1 => tau(),
        _ => tau().conj(),
    }
}

fn ei(z: C64) -> Scaled {
    Scaled::exp(C64::i() * z)
}

/// The exponentials `e^{-iτ^m kL}` and `e^{iτ^m kL}`, `m = 0, 1, 2`.
///
/// Rotating `k` by `τ^r` permutes them, so one set serves `Δ` and the
/// coefficients at `k`, `τk` and `τ²k`.
#[derive(Debug, Clone, Copy)]
pub struct OrbitExponentials {
    minus: [Scaled; 3],
    plus: [Scaled; 3],
}

impl OrbitExponentials {
    pub fn new(k: C64, length: f64) -> Self {
        let kl = k * length;
        Self {
            minus: std::array::from_fn(|m| ei(-tau_pow(m) * kl)),
            plus: std::array::from_fn(|m| ei(tau_pow(m) * kl)),
        }
    }

    /// `e^{-iτ^m (τ^r k) L}`.
    #[inline]
    fn em(&self, r: usize, m: usize) -> Scaled {
        self.minus[(m + r) % 3]
    }

    /// `e^{iτ^m (τ^r k) L}`.
    #[inline]
    fn ep(&self, r: usize, m: usize) -> Scaled {
        self.plus[(m + r) % 3]
    }

    /// The six terms of `Δ(τ^r k)`.
    pub fn delta_terms(&self, r: usize, alpha: f64) -> [Scaled; 6] {
        let mut out = [Scaled::ZERO; 6];
        for m in 0..3 {
            // τ · τ^m e^{-iτ^m kL} and τ · α τ^m e^{iτ^m kL}
            let c = tau_pow(m + 1);
            out[m] = self.em(r, m) * c;
            out[3 + m] = if alpha == 0.0 {
                Scaled::ZERO
            } else {
                self.ep(r, m) * (c * alpha)
            };
        }
        out
    }

    /// `Δ(τ^r k)`.
    pub fn delta(&self, r: usize, alpha: f64) -> Scaled {
        Scaled::sum(self.delta_terms(r, alpha))
    }

    /// `A_j`, `B_j` at `τ^r k`.
    pub fn coefficients(&self, r: usize, alpha: f64) -> Coefficients {
        let t = tau();
        let t2 = tau_pow(2);
        let al = C64::new(alpha, 0.0);
        let one = Scaled::ONE;
        // e^{ikL}, e^{iτkL}, e^{iτ²kL} and their reciprocals at τ^r k
        let (p0, p1, p2) = (self.ep(r, 0), self.ep(r, 1), self.ep(r, 2));
        let (m0, m1, m2) = (self.em(r, 0), self.em(r, 1), self.em(r, 2));
        let a1 = Scaled::sum([p0 * (t * alpha), m1 * t2, m2]);
        let a2 = m0 - p1 * al;
        let a3 = m0 - p2 * al;
        let b1 = Scaled::sum([Scaled::from_c(-t), -(m1 * al), -(m2 * (t2 * alpha))]);
        let b2 = one - m2 * al;
        let b3 = one - m1 * al;
        Coefficients {
            a: [a1, a2, a3],
            b: [b1, b2, b3],
        }
    }
}

fn delta_terms(k: C64, length: f64, alpha: f64) -> [Scaled; 6] {
    OrbitExponentials::new(k, length).delta_terms(0, alpha)
}

/// Relative size of a sum of terms against its largest term.
pub fn relative_size(terms: &[Scaled]) -> f64 {
    let max = Scaled::max_ln_abs(terms.iter());
    (Scaled::sum(terms.iter().copied()).ln_abs() - max).exp()
}

/// `Δ(k) = τ{[e^{-ikL} + τe^{-iτkL} + τ²e^{-iτ²kL}] + α[e^{ikL} + τe^{iτkL} + τ²e^{iτ²kL}]}`.
pub fn delta(k: C64, length: f64, alpha: f64) -> Scaled {
    Scaled::sum(delta_terms(k, length, alpha))
}

/// `Δ(k)` relative to its largest exponential term; this is the size used
/// for zero residuals and pole-proximity checks.
pub fn delta_relative(k: C64, length: f64, alpha: f64) -> f64 {
    relative_size(&delta_terms(k, length, alpha))
}

/// `Δ'(k)`.
pub fn delta_prime(k: C64, length: f64, alpha: f64) -> Scaled {
    let kl = k * length;
    let mut terms = Vec::with_capacity(6);
    for m in 0..3 {
        let c = tau_pow(m + 1);
        let d = tau_pow(m) * length;
        terms.push(ei(-tau_pow(m) * kl) * (c * C64::new(0.0, -1.0) * d));
        if alpha != 0.0 {
            terms.push(ei(tau_pow(m) * kl) * (c * alpha * C64::i() * d));
        }
    }
    Scaled::sum(terms)
}

/// The coefficient functions `A_1..A_3`, `B_1..B_3`.
#[derive(Debug, Clone, Copy)]
pub struct Coefficients {
    pub a: [Scaled; 3],
    pub b: [Scaled; 3],
}

pub fn coefficients(k: C64, length: f64, alpha: f64) -> Coefficients {
    OrbitExponentials::new(k, length).coefficients(0, alpha)
}

/// Everything the solution integrand needs at one spectral point.
#[derive(Debug, Clone)]
pub struct CharacteristicBundle {
    pub k: C64,
    pub tau: C64,
    pub delta: Scaled,
    pub coefficients: Coefficients,
    /// `e^{ik³t} ζ⁺(k)`.
    pub zeta_plus: Scaled,
    /// `e^{ik³t} ζ⁻(k)`.
    pub zeta_minus: Scaled,
}

/// `e^{λt}ζ±` from the retarded values `N(k)`, `N(τk)`, `N(τ²k)`.
pub fn zeta_from_parts(
    k: C64,
    delta: Scaled,
    c: &Coefficients,
    f_ret: Scaled,
    g_ret: Scaled,
    n: [Scaled; 3],
) -> (Scaled, Scaled) {
    let k2 = Scaled::from_c(k * k);
    let t2 = tau_pow(2);
    let zp = Scaled::sum([
        k2 * f_ret * delta,
        n[0] * c.a[0],
        -(n[1] * c.a[1] * t2),
        -(n[2] * c.a[2]),
    ]);
    let zm = Scaled::sum([
        k2 * g_ret * delta,
        n[0] * c.b[0],
        -(n[1] * c.b[1] * t2),
        -(n[2] * c.b[2]),
    ]);
    (zp, zm)
}

fn require_interval(problem: &ProblemSpec) -> Result<f64> {
    if problem.is_half_line() {
        return Err(Error::InvalidArgument(
            "this operation is defined for interval problems".into(),
        ));
    }
    Ok(problem.length())
}

/// Orbit values `N(τ^m k)` (retarded) and the shared time values.
fn orbit(
    sd: &SpectralData,
    k: C64,
    subtract_local: bool,
) -> (TimeValues, [SpaceValues; 3], [Scaled; 3]) {
    let lambda = C64::i() * k * k * k;
    let tv = sd.time_values(lambda, subtract_local);
    let sv: [SpaceValues; 3] = std::array::from_fn(|m| sd.space_values(tau_pow(m) * k));
    let n: [Scaled; 3] = std::array::from_fn(|m| sd.n_ret(tau_pow(m) * k, &tv, &sv[m]));
    (tv, sv, n)
}

/// Build the bundle at `k` from precomputed data transforms.
pub fn bundle_with(sd: &SpectralData, alpha: f64, k: C64) -> CharacteristicBundle {
    let length = sd.length().expect("interval data");
    let d = delta(k, length, alpha);
    let c = coefficients(k, length, alpha);
    let (tv, _, n) = orbit(sd, k, false);
    let (zp, zm) = zeta_from_parts(k, d, &c, tv.f, tv.g, n);
    CharacteristicBundle {
        k,
        tau: tau(),
        delta: d,
        coefficients: c,
        zeta_plus: zp,
        zeta_minus: zm,
    }
}

/// `(e^{ik³t}ζ⁺, e^{ik³t}ζ⁻)` at `k`.
pub fn zeta_pair(problem: &ProblemSpec, k: C64, t: f64) -> Result<(Scaled, Scaled)> {
    require_interval(problem)?;
    let sd = SpectralData::new(problem, t)?;
    let b = bundle_with(&sd, problem.alpha, k);
    Ok((b.zeta_plus, b.zeta_minus))
}

/// Relative size of `ζ⁺ - e^{-ikL}ζ⁻ - (q̂0 + H) Δ` (all retarded), where
/// `H` is the forcing transform.
pub fn relation_residual(problem: &ProblemSpec, k: C64, t: f64) -> Result<f64> {
    let length = require_interval(problem)?;
    let sd = SpectralData::new(problem, t)?;
    Ok(relation_residual_with(&sd, problem.alpha, length, k))
}

pub fn relation_residual_with(sd: &SpectralData, alpha: f64, length: f64, k: C64) -> f64 {
    let b = bundle_with(sd, alpha, k);
    let lambda = C64::i() * k * k * k;
    let tv = sd.time_values(lambda, false);
    let sv = sd.space_values(k);
    // with forcing, q̂0 is augmented by the forcing transform
    let q = sd.q_ret(&tv, &sv) * b.delta;
    let m = Scaled::exp(C64::new(0.0, -1.0) * k * length) * b.zeta_minus;
    let terms = [b.zeta_plus, -m, -q];
    let scale = Scaled::max_ln_abs(terms.iter());
    if scale == f64::NEG_INFINITY {
        return 0.0;
    }
    (Scaled::sum(terms).ln_abs() - scale).exp()
}

/// A nontrivial zero of `Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub value: C64,
    /// Index `j` of the nearest line `τ^j ℝ` (`α ≠ 0`) or ray `-iτ^j ℝ⁺` (`α = 0`).
    pub ray: usize,
    /// 1-based rank by modulus within its ray.
    pub rank: usize,
    /// Distance to the nearest of the lines `τ^j ℝ`.
    pub line_distance: f64,
    /// `|Δ|` relative to its largest exponential term.
    pub residual: f64,
}

/// Zeros of `Δ` in a disk, excluding the double zero at the origin.
#[derive(Debug, Clone)]
pub struct ZeroTable {
    pub alpha: f64,
    pub length: f64,
    pub radius: f64,
    pub zeros: Vec<Zero>,
    pub count_per_ray: [usize; 3],
    /// Candidates abandoned because Newton did not converge.
    pub dropped: usize,
}

impl ZeroTable {
    /// CSV with columns `re,im,ray,rank`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,ray,rank\n");
        for z in &self.zeros {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                crate::fmt17(z.value.re),
                crate::fmt17(z.value.im),
                z.ray,
                z.rank
            );
        }
        s
    }

    /// Smallest distance from any zero to the lines `τ^j ℝ`.
    pub fn min_line_distance(&self) -> Option<f64> {
        self.zeros
            .iter()
            .map(|z| z.line_distance)
            .min_by(|a, b| a.total_cmp(b))
    }

    /// Is there a stored zero within `tol` of `z`?
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        self.zeros.iter().any(|w| (w.value - z).norm() <= tol)
    }

    /// Number of stored zeros strictly inside the rectangle.
    pub fn count_in_box(&self, lo: C64, hi: C64) -> usize {
        self.zeros
            .iter()
            .filter(|z| {
                z.value.re > lo.re && z.value.re < hi.re && z.value.im > lo.im && z.value.im < hi.im
            })
            .count()
    }
}

/// Distance from `z` to the line `τ^j ℝ`.
pub fn line_distance(z: C64, j: usize) -> f64 {
    (z * tau_pow(j).conj()).im.abs()
}

/// Distance from `z` to the ray `-iτ^j ℝ⁺`.
pub fn ray_distance(z: C64, j: usize) -> f64 {
    let w = z / (C64::new(0.0, -1.0) * tau_pow(j));
    if w.re >= 0.0 {
        w.im.abs()
    } else {
        w.norm()
    }
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a < -PI {
        a += 2.0 * PI;
    }
    a
}

struct Winding<'a> {
    f: &'a dyn Fn(C64) -> (f64, f64),
}

impl Winding<'_> {
    /// Total change of `arg f` along the segment, or `None` if the path runs
    /// through a zero.
    fn segment(&self, a: C64, b: C64) -> Option<f64> {
        let (pa, ra) = (self.f)(a);
        let (pb, rb) = (self.f)(b);
        self.refine(a, b, pa, pb, ra.min(rb), 0)
    }

    fn refine(&self, a: C64, b: C64, pa: f64, pb: f64, small: f64, depth: usize) -> Option<f64> {
        if small < 1e-13 {
            return None;
        }
        let d = wrap(pb - pa);
        if d.abs() < PI / 6.0 && depth >= 2 {
            return Some(d);
        }
        if depth > 48 {
            return None;
        }
        let m = (a + b) * 0.5;
        let (pm, rm) = (self.f)(m);
        let l = self.refine(a, m, pa, pm, small.min(rm), depth + 1)?;
        let r = self.refine(m, b, pm, pb, small.min(rm), depth + 1)?;
        Some(l + r)
    }

    /// Number of zeros inside the rectangle, counted with multiplicity.
    fn rect(&self, lo: C64, hi: C64) -> Option<i64> {
        let c = [
            lo,
            C64::new(hi.re, lo.im),
            hi,
            C64::new(lo.re, hi.im),
        ];
        let mut total = 0.0;
        for i in 0..4 {
            let a = c[i];
            let b = c[(i + 1) % 4];
            // split long edges so the recursion starts from a useful depth
            let pieces = ((b - a).norm() / 0.5).ceil().max(1.0) as usize;
            for p in 0..pieces {
                let s = a + (b - a) * (p as f64 / pieces as f64);
                let e = a + (b - a) * ((p + 1) as f64 / pieces as f64);
                total += self.segment(s, e)?;
            }
        }
        Some((total / (2.0 * PI)).round() as i64)
    }

    fn circle(&self, c: C64, r: f64) -> Option<i64> {
        let n = 64;
        let mut total = 0.0;
        for i in 0..n {
            let a = c + C64::from_polar(r, 2.0 * PI * i as f64 / n as f64);
            let b = c + C64::from_polar(r, 2.0 * PI * (i + 1) as f64 / n as f64);
            total += self.segment(a, b)?;
        }
        Some((total / (2.0 * PI)).round() as i64)
    }
}

/// Number of zeros of `Δ` (with multiplicity, including the origin) inside
/// the rectangle `[lo.re, hi.re] × [lo.im, hi.im]`, by the argument principle.
pub fn winding_count(length: f64, alpha: f64, lo: C64, hi: C64) -> Option<i64> {
    let f = move |k: C64| {
        let terms = delta_terms(k, length, alpha);
        let max = Scaled::max_ln_abs(terms.iter());
        let d = Scaled::sum(terms);
        (d.arg(), (d.ln_abs() - max).exp())
    };
    Winding { f: &f }.rect(lo, hi)
}

/// Multiplicity of the zero of `Δ` at the origin.
pub fn origin_multiplicity(length: f64, alpha: f64) -> i64 {
    let f = move |k: C64| {
        let d = delta(k, length, alpha);
        // near the origin all terms are O(1) and Δ is small; use absolute size
        (d.arg(), 1.0)
    };
    Winding { f: &f }
        .circle(C64::new(0.0, 0.0), 0.05 / length)
        .unwrap_or(2)
}

fn newton(k0: C64, length: f64, alpha: f64) -> Option<C64> {
    let mut k = k0;
    for _ in 0..50 {
        let step = (delta(k, length, alpha) / delta_prime(k, length, alpha)).to_c();
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        k -= step;
        if step.norm() <= 1e-15 * k.norm().max(1.0) {
            break;
        }
    }
    (delta_relative(k, length, alpha) <= 1e-12).then_some(k)
}

/// [`find_zeros`] memoised per `(α, L, radius)` for the life of the process.
pub fn find_zeros_cached(alpha: f64, length: f64, radius: f64) -> Result<Arc<ZeroTable>> {
    type Key = (u64, u64, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<ZeroTable>>>> = OnceLock::new();
    let key = (alpha.to_bits(), length.to_bits(), radius.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(t.clone());
    }
    let t = Arc::new(find_zeros(alpha, length, radius)?);
    cache
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(key, t.clone());
    Ok(t)
}

/// All zeros of `Δ` with `0 < |λ| <= radius`.
///
/// A quadtree over a square covering the disk counts zeros per box with the
/// argument principle; boxes holding zeros are split until small, then
/// Newton's method refines a seed in each.
pub fn find_zeros(alpha: f64, length: f64, radius: f64) -> Result<ZeroTable> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidArgument(format!("length must be positive, got {length}")));
    }
    let m0 = origin_multiplicity(length, alpha);
    let centre = C64::new(0.0137, -0.0091);
    let half = radius + 1.0;
    let mut found: Vec<C64> = Vec::new();
    let mut dropped = 0usize;
    let mut stack = vec![(centre, half, 0usize)];
    while let Some((c, h, tries)) = stack.pop() {
        let lo = c - C64::new(h, h);
        let hi = c + C64::new(h, h);
        let Some(mut n) = winding_count(length, alpha, lo, hi) else {
            // a zero sits on the boundary: nudge the box and retry
            if tries < 6 {
                let j = C64::new(0.0031, -0.0047) * h * (tries + 1) as f64;
                stack.push((c + j, h, tries + 1));
            } else {
                dropped += 1;
            }
            continue;
        };
        if lo.re < 0.0 && hi.re > 0.0 && lo.im < 0.0 && hi.im > 0.0 {
            n -= m0;
        }
        if n <= 0 {
            continue;
        }
        if h <= 0.2 / length || (n == 1 && h <= 0.6 / length) {
            let seeds = if n == 1 {
                vec![c]
            } else {
                (0..4 * n as usize)
                    .map(|i| c + C64::from_polar(0.5 * h, 2.0 * PI * i as f64 / (4 * n) as f64))
                    .collect()
            };
            let mut got = 0;
            for s in seeds {
                if let Some(z) = newton(s, length, alpha) {
                    let inside = (z.re - c.re).abs() <= 1.5 * h && (z.im - c.im).abs() <= 1.5 * h;
                    if inside && z.norm() > 1e-6 && !found.iter().any(|w| (w - z).norm() < 1e-6) {
                        found.push(z);
                        got += 1;
                    }
                }
            }
            if got < n as usize {
                if h > 1e-4 {
                    let q = h / 2.0;
                    for (dx, dy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
                        stack.push((c + C64::new(dx * q, dy * q), q, 0));
                    }
                } else {
                    dropped += n as usize - got;
                }
            }
            continue;
        }
        let q = h / 2.0;
        for (dx, dy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
            stack.push((c + C64::new(dx * q, dy * q), q, 0));
        }
    }
    found.retain(|z| z.norm() <= radius);
    found.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
    let mut zeros: Vec<Zero> = found
        .into_iter()
        .map(|z| {
            let ldist: [f64; 3] = std::array::from_fn(|j| line_distance(z, j));
            let ray = if alpha == 0.0 {
                (0..3)
                    .min_by(|&a, &b| ray_distance(z, a).total_cmp(&ray_distance(z, b)))
                    .unwrap()
            } else {
                (0..3).min_by(|&a, &b| ldist[a].total_cmp(&ldist[b])).unwrap()
            };
            Zero {
                value: z,
                ray,
                rank: 0,
                line_distance: ldist.iter().copied().fold(f64::INFINITY, f64::min),
                residual: delta_relative(z, length, alpha),
            }
        })
        .collect();
    let mut count_per_ray = [0usize; 3];
    for z in zeros.iter_mut() {
        count_per_ray[z.ray] += 1;
        z.rank = count_per_ray[z.ray];
    }
    Ok(ZeroTable {
        alpha,
        length,
        radius,
        zeros,
        count_per_ray,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_is_a_primitive_cube_root() {
        let t = tau();
        assert!((t * t * t - 1.0).norm() < 1e-15);
        assert!((1.0 + t + t * t).norm() < 1e-15);
    }

    #[test]
    fn delta_vanishes_to_second_order_at_origin() {
        assert!(delta(C64::new(0.0, 0.0), 1.0, 0.4).to_c().norm() < 1e-15);
        assert_eq!(origin_multiplicity(1.0, 0.5), 2);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let k = C64::new(1.3, -0.7);
        let h = 1e-6;
        let fd = (delta(k + h, 1.0, 0.5).to_c() - delta(k - h, 1.0, 0.5).to_c()) / (2.0 * h);
        let d = delta_prime(k, 1.0, 0.5).to_c();
        assert!((fd - d).norm() < 1e-8 * d.norm());
    }

    #[test]
    fn coefficient_identities() {
        let k = C64::new(2.0, 1.0);
        let c = coefficients(k, 1.0, 0.3);
        let e = Scaled::exp(C64::new(0.0, -1.0) * k);
        let d = delta(k, 1.0, 0.3);
        let r1 = (c.a[0] - e * c.b[0] - d).to_c().norm() / d.to_c().norm();
        assert!(r1 < 1e-12);
        for j in 1..3 {
            let lhs = c.a[j].to_c();
            let rhs = (e * c.b[j]).to_c();
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(rhs.norm()));
        }
    }
}
