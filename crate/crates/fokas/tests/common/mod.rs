//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use fokas::characteristic::delta;
use num_complex::Complex64 as C64;

/// Adaptive Simpson quadrature of a complex integrand.
pub fn adaptive_simpson<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, tol: f64) -> C64 {
    fn step<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> C64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
        let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
        let diff = left + right - whole;
        if depth == 0 || diff.norm() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Bisection for a sign change of `g` in `[a, b]`.
pub fn bisect<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    assert!(ga * g(b) <= 0.0, "no sign change in [{a}, {b}]");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 || b - a < 1e-15 * m.abs().max(1.0) {
            return m;
        }
        if ga * gm < 0.0 {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
    }
    0.5 * (a + b)
}

/// Winding number of `Δ` around the boundary of the box `[lo, hi]`, sampled
/// at `n` points.
pub fn delta_winding(alpha: f64, length: f64, lo: C64, hi: C64, n: usize) -> f64 {
    let corners = [lo, C64::new(hi.re, lo.im), hi, C64::new(lo.re, hi.im), lo];
    let per_side = n / 4;
    let mut total = 0.0;
    let mut prev = delta(lo, length, alpha).arg();
    for side in 0..4 {
        for j in 1..=per_side {
            let s = j as f64 / per_side as f64;
            let z = corners[side] + (corners[side + 1] - corners[side]) * s;
            let a = delta(z, length, alpha).arg();
            let mut d = a - prev;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            total += d;
            prev = a;
        }
    }
    total / (2.0 * std::f64::consts::PI)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Random boxes inside the disk of radius 29 whose edges keep 0.05 away from
/// every zero in `table` and from the double zero at the origin.
///
/// Returns `(lo, hi, expected)` with `expected` the count of zeros inside,
/// including the origin's multiplicity two.
pub fn random_boxes(table: &fokas::characteristic::ZeroTable, seed: u64, n: usize) -> Vec<(C64, C64, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let c = C64::new;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let cx = rng.gen_range(-20.0..20.0);
        let cy = rng.gen_range(-20.0..20.0);
        let w = rng.gen_range(1.0..8.0);
        let h = rng.gen_range(1.0..8.0);
        let lo = c(cx - w / 2.0, cy - h / 2.0);
        let hi = c(cx + w / 2.0, cy + h / 2.0);
        let corners = [lo, hi, c(lo.re, hi.im), c(hi.re, lo.im)];
        if corners.iter().any(|z| z.norm() > 29.0) {
            continue;
        }
        let near_edge = |v: C64| {
            let inside_x = v.re > lo.re - 0.05 && v.re < hi.re + 0.05;
            let inside_y = v.im > lo.im - 0.05 && v.im < hi.im + 0.05;
            let on_edge = (v.re - lo.re).abs() < 0.05
                || (v.re - hi.re).abs() < 0.05
                || (v.im - lo.im).abs() < 0.05
                || (v.im - hi.im).abs() < 0.05;
            inside_x && inside_y && on_edge
        };
        if table.zeros.iter().any(|z| near_edge(z.value)) || near_edge(c(0.0, 0.0)) {
            continue;
        }
        let origin_inside = lo.re < 0.0 && hi.re > 0.0 && lo.im < 0.0 && hi.im > 0.0;
        let expected = table.count_in_box(lo, hi) as f64 + if origin_inside { 2.0 } else { 0.0 };
        out.push((lo, hi, expected));
    }
    out
}
