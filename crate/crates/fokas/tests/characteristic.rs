mod common;

use common::{adaptive_simpson, bisect, delta_winding, random_boxes};
use fokas::characteristic::{coefficients, delta, find_zeros, relation_residual, tau, tau_pow, zeta_pair};
use fokas::{manufactured_problem, parse_data_function, Arity, DataFunction, ProblemSpec};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn tau_algebra() {
    let t = tau();
    assert!((t * t * t - c(1.0, 0.0)).norm() < 1e-15);
    assert!((c(1.0, 0.0) + t + t * t).norm() < 1e-15);
    assert_eq!(tau_pow(4), tau_pow(1));
}

#[test]
fn delta_vanishes_at_origin() {
    for alpha in [0.0, 0.3, 1.0, -1.0] {
        assert!(delta(c(0.0, 0.0), 1.0, alpha).to_c().norm() < 1e-15);
    }
}

#[test]
fn delta_rotation_rule() {
    // Δ(τk) = τ²Δ(k); the zero set is rotation invariant
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for alpha in [0.0, 0.5, 1.0] {
        for _ in 0..1000 {
            let k = c(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let lhs = delta(tau() * k, 1.0, alpha).to_c();
            let rhs = tau_pow(2) * delta(k, 1.0, alpha).to_c();
            assert!(rel(lhs, rhs) < 1e-12, "alpha={alpha} k={k}");
        }
    }
    // the literal Δ(τk) = Δ(k) fails unless Δ(k) = 0
    let k = c(1.3, -0.7);
    let d = delta(k, 1.0, 0.5).to_c();
    assert!(rel(delta(tau() * k, 1.0, 0.5).to_c(), d) > 1.0);
}

#[test]
fn coefficient_examples() {
    let (k, alpha) = (c(2.0, 1.0), 0.3);
    let co = coefficients(k, 1.0, alpha);
    let e = (-C64::i() * k).exp();
    let d = delta(k, 1.0, alpha).to_c();
    assert!(rel(co.a[0].to_c() - e * co.b[0].to_c(), d) < 1e-12);
    for j in [1, 2] {
        let (a, b) = (co.a[j].to_c(), e * co.b[j].to_c());
        assert!((a - b).norm() <= 1e-12 * a.norm().max(b.norm()));
    }
    let co = coefficients(c(0.0, 0.0), 1.0, 0.0);
    assert!((co.a[0].to_c() - (tau_pow(2) + 1.0)).norm() < 1e-15);
    assert!((co.b[0].to_c() + tau()).norm() < 1e-15);
}

fn zero_problem() -> ProblemSpec {
    ProblemSpec::interval(
        1.0,
        0.7,
        DataFunction::zero(Arity::X),
        DataFunction::zero(Arity::T),
        DataFunction::zero(Arity::T),
        None,
    )
    .unwrap()
}

#[test]
fn zeta_of_zero_data_vanishes() {
    let (zp, zm) = zeta_pair(&zero_problem(), c(1.0, -0.5), 0.4).unwrap();
    assert!(zp.is_zero() && zm.is_zero());
    assert_eq!(relation_residual(&zero_problem(), c(1.0, -0.5), 0.4).unwrap(), 0.0);
}

#[test]
fn global_relation_examples() {
    let b = manufactured_problem("alpha0-poly").unwrap();
    assert!(relation_residual(&b.problem, c(1.1, -0.4), 0.3).unwrap() < 1e-10);
}

/// `N(k,t)` from adaptive quadrature of its definition.
fn n_oracle(p: &ProblemSpec, k: C64, t: f64) -> C64 {
    let k3 = k * k * k;
    let l = p.length();
    let tol = 1e-15;
    let q = adaptive_simpson(&|x: f64| (-C64::i() * k * x).exp() * p.q0.at(x), 0.0, l, tol);
    let f = adaptive_simpson(&|s: f64| (-C64::i() * k3 * s).exp() * p.f0.at(s), 0.0, t, tol);
    let g = adaptive_simpson(&|s: f64| (-C64::i() * k3 * s).exp() * p.g0.at(s), 0.0, t, tol);
    let h = match &p.h {
        Some(h) => adaptive_simpson(
            &|s: f64| adaptive_simpson(&|x: f64| (-C64::i() * (k * x + k3 * s)).exp() * h.eval(x, s), 0.0, l, tol),
            0.0,
            t,
            tol,
        ),
        None => c(0.0, 0.0),
    };
    q - k * k * f + (-C64::i() * k * l).exp() * k * k * g + h
}

#[test]
fn zeta_matches_direct_evaluation() {
    let b = manufactured_problem("alpha13-poly").unwrap();
    let p = &b.problem;
    let (k, t) = (c(0.8, 0.6), 0.25);
    let co = coefficients(k, 1.0, p.alpha);
    let d = delta(k, 1.0, p.alpha).to_c();
    let ft = adaptive_simpson(&|s: f64| (-C64::i() * k * k * k * s).exp() * p.f0.at(s), 0.0, t, 1e-15);
    let gt = adaptive_simpson(&|s: f64| (-C64::i() * k * k * k * s).exp() * p.g0.at(s), 0.0, t, 1e-15);
    let n = [0, 1, 2].map(|m| n_oracle(p, tau_pow(m) * k, t));
    let a = co.a.map(|v| v.to_c());
    let bb = co.b.map(|v| v.to_c());
    let tau2 = tau_pow(2);
    let plus = k * k * ft * d + n[0] * a[0] - tau2 * n[1] * a[1] - n[2] * a[2];
    let minus = k * k * gt * d + n[0] * bb[0] - tau2 * n[1] * bb[1] - n[2] * bb[2];
    let growth = (C64::i() * k * k * k * t).exp();
    let (zp, zm) = zeta_pair(p, k, t).unwrap();
    assert!(rel(zp.to_c(), growth * plus) < 1e-9, "{} vs {}", zp.to_c(), growth * plus);
    assert!(rel(zm.to_c(), growth * minus) < 1e-9);
}

#[test]
fn global_relation_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let names = ["alpha0-poly", "alpha13-poly", "alpha1-sine", "alpha0-bc2"];
    for i in 0..100 {
        let alpha = rng.gen_range(0.0..1.0);
        let b = manufactured_problem(names[i % names.len()]).unwrap();
        let p = ProblemSpec::interval(1.0, alpha, b.problem.q0, b.problem.f0, b.problem.g0, b.problem.h).unwrap();
        let r = rng.gen_range(0.1..10.0);
        let k = C64::from_polar(r, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        let t = rng.gen_range(0.0..2.0);
        let res = relation_residual(&p, k, t).unwrap();
        assert!(res <= 1e-9, "residual {res:e} at k={k} alpha={alpha} t={t}");
    }
}

#[test]
fn global_relation_near_a_zero() {
    let b = manufactured_problem("alpha1-sine").unwrap();
    let z = find_zeros(1.0, 1.0, 12.0).unwrap();
    for zero in z.zeros.iter().take(4) {
        let k = zero.value + c(1e-7, 0.0);
        assert!(relation_residual(&b.problem, k, 0.5).unwrap() <= 1e-9);
    }
}

#[test]
fn first_real_zero_for_alpha_one() {
    // Δ(k)e^{iπ/3} is real on the real axis when α = 1
    let rot = C64::from_polar(1.0, std::f64::consts::PI / 3.0);
    let g = |k: f64| (delta(c(k, 0.0), 1.0, 1.0).to_c() * rot).re;
    let lo = (1..200).map(|i| i as f64 * 0.05).find(|&k| g(k) * g(k + 0.05) < 0.0).unwrap();
    let root = bisect(g, lo, lo + 0.05);
    assert!((root - 5.225154).abs() < 1e-6, "root {root}");
    let table = find_zeros(1.0, 1.0, 30.0).unwrap();
    let found = table
        .zeros
        .iter()
        .filter(|z| z.value.re > 0.0 && z.value.im.abs() < 1e-8)
        .map(|z| z.value.re)
        .fold(f64::INFINITY, f64::min);
    assert!((found - root).abs() < 1e-10);
}

#[test]
fn zero_tables_are_complete_and_closed() {
    for alpha in [0.0, 0.5, 1.0] {
        let table = find_zeros(alpha, 1.0, 30.0).unwrap();
        assert_eq!(table.dropped, 0);
        assert!(!table.zeros.is_empty());
        for z in &table.zeros {
            assert!(z.value.norm() <= 30.0 && z.value.norm() > 1e-6);
            assert!(z.residual <= 1e-10, "residual {}", z.residual);
            for m in [1, 2] {
                let w = tau_pow(m) * z.value;
                if w.norm() < 29.999 {
                    assert!(table.contains(w, 1e-8), "orbit of {} missing", z.value);
                }
            }
        }
        for (lo, hi, expected) in random_boxes(&table, 17 + alpha.to_bits() % 1000, 10) {
            let wind = delta_winding(alpha, 1.0, lo, hi, 4000);
            assert!((wind - expected).abs() < 1e-6, "alpha={alpha} box {lo}..{hi}: winding {wind} vs {expected}");
        }
    }
}

#[test]
fn alpha_one_zeros_lie_on_the_lines() {
    let table = find_zeros(1.0, 1.0, 30.0).unwrap();
    for z in &table.zeros {
        let w = z.value * tau_pow(3 - z.ray % 3);
        assert!(w.im.abs() <= 1e-8, "zero {} not on line {}", z.value, z.ray);
    }
}

#[test]
fn alpha_half_zeros_are_separated_from_the_lines() {
    let table = find_zeros(0.5, 1.0, 30.0).unwrap();
    let d = table.min_line_distance().unwrap();
    assert!((d - 0.68297).abs() < 1e-4, "min distance {d}");
    // argument principle: a strip of half-width below d around the real
    // line holds only the double zero at the origin, a wider one more
    let thin = delta_winding(0.5, 1.0, c(-29.0, -(d - 0.005)), c(29.0, d - 0.005), 40000);
    assert!((thin - 2.0).abs() < 1e-6, "thin strip winding {thin}");
    let wide = delta_winding(0.5, 1.0, c(-29.0, -(d + 0.005)), c(29.0, d + 0.005), 40000);
    assert!(wide > 2.5, "wide strip winding {wide}");
}

#[test]
fn zero_csv_columns() {
    let table = find_zeros(1.0, 1.0, 10.0).unwrap();
    let csv = table.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("re,im,ray,rank"));
    assert_eq!(lines.count(), table.zeros.len());
}

#[test]
fn data_with_callbacks_satisfy_the_relation() {
    let q0 = DataFunction::from_fn(Arity::X, |x, _| (x * 3.0).cos());
    let f0 = parse_data_function("t", Arity::T).unwrap();
    let p = ProblemSpec::interval(2.0, -0.4, q0, f0, DataFunction::zero(Arity::T), None).unwrap();
    assert!(relation_residual(&p, c(2.5, -1.5), 0.8).unwrap() < 1e-10);
}
