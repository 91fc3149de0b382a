mod common;

use common::linspace;
use fokas::contours::{contour_halfline, select_contour, ContourOverrides};
use fokas::evaluator::{
    energy, evaluate, evaluate_grid, evaluate_halfline, evaluate_interval, evaluate_points, quadrature_rule,
    quadrature_rule_for_frequency, EvalSettings,
};
use fokas::verification::{max_error, Reference};
use fokas::{manufactured_problem, parse_data_function, Arity, DataFunction, Error, ProblemSpec};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn problem(alpha: f64, q0: &str, f0: &str, g0: &str, h: Option<&str>) -> ProblemSpec {
    ProblemSpec::interval(
        1.0,
        alpha,
        parse_data_function(q0, Arity::X).unwrap(),
        parse_data_function(f0, Arity::T).unwrap(),
        parse_data_function(g0, Arity::T).unwrap(),
        h.map(|h| parse_data_function(h, Arity::XT).unwrap()),
    )
    .unwrap()
}

#[test]
fn quadrature_examples() {
    let r = quadrature_rule(1.0, 1, 8).unwrap();
    assert!((r.integrate(|x| c(x * x)) - c(2.0 / 3.0)).norm() < 1e-14);
    let r = quadrature_rule(1.0, 4, 16).unwrap();
    let e = std::f64::consts::E;
    assert!((r.integrate(|x| c(x.exp())) - c(e - 1.0 / e)).norm() < 1e-12);
    let r = quadrature_rule_for_frequency(5.0, 10.0, 12.0, 16).unwrap();
    assert!((r.integrate(|x| c((10.0 * x).cos())) - c(0.2 * 50f64.sin())).norm() < 1e-10);
    assert!(quadrature_rule(1.0, 0, 8).is_err());
    assert!(quadrature_rule(1.0, 2, 1).is_err());
}

#[test]
fn zero_data_gives_zero() {
    let s = EvalSettings::default();
    for alpha in [0.0, 0.5, 1.0] {
        let p = problem(alpha, "0", "0", "0", None);
        for v in evaluate_points(&p, &[0.2, 0.7], 0.4, &s).unwrap() {
            assert!(v.norm() < 1e-12);
        }
    }
    let h = ProblemSpec::half_line(DataFunction::zero(Arity::X), DataFunction::zero(Arity::T), None).unwrap();
    assert!(evaluate(&h, 1.3, 0.5, &s).unwrap().norm() < 1e-12);
}

#[test]
fn alpha0_poly_point() {
    let b = manufactured_problem("alpha0-poly").unwrap();
    let cs = select_contour(&b.problem, 0.25).unwrap();
    let v = evaluate_interval(&b.problem, 0.5, 0.25, &cs, &EvalSettings::default()).unwrap();
    assert!((v - c(0.75)).norm() <= 1e-4);
    assert!((v - c(0.75)).norm() <= 1e-10, "regression: {v}");
}

#[test]
fn alpha1_sine_point() {
    let b = manufactured_problem("alpha1-sine").unwrap();
    let v = evaluate(&b.problem, 0.25, 2.0, &EvalSettings::default()).unwrap();
    assert!((v - c(1.0)).norm() <= 1e-3, "{v}");
}

#[test]
fn halfline_points() {
    let b = manufactured_problem("halfline-exp").unwrap();
    let s = EvalSettings::default();
    let v = evaluate_halfline(&b.problem, 1.0, 0.25, &contour_halfline(), &s).unwrap();
    assert!((v - c((-1.0f64).exp())).norm() <= 1e-6);
    let v = evaluate(&b.problem, 0.0, 0.3, &s).unwrap();
    assert!((v - c((0.6 * std::f64::consts::PI).sin())).norm() <= 1e-6);
    assert!(matches!(
        evaluate_interval(&b.problem, 0.5, 0.5, &[contour_halfline()], &s),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn positions_outside_the_domain_are_rejected() {
    let b = manufactured_problem("alpha0-poly").unwrap();
    let s = EvalSettings::default();
    assert!(matches!(evaluate(&b.problem, 1.5, 0.5, &s), Err(Error::InvalidArgument(_))));
    assert!(matches!(evaluate(&b.problem, -0.1, 0.5, &s), Err(Error::InvalidArgument(_))));
    assert!(matches!(evaluate(&b.problem, 0.5, -1.0, &s), Err(Error::InvalidArgument(_))));
}

#[test]
fn grid_matches_pointwise_calls() {
    let b = manufactured_problem("alpha0-poly").unwrap();
    let s = EvalSettings::default();
    let xs = [0.3, 0.8];
    let ts = [0.2, 0.6];
    let g = evaluate_grid(&b.problem, &xs, &ts, &s).unwrap();
    for (j, &t) in ts.iter().enumerate() {
        assert_eq!(g.values[j], evaluate_points(&b.problem, &xs, t, &s).unwrap());
        for (i, &x) in xs.iter().enumerate() {
            let v = evaluate(&b.problem, x, t, &s).unwrap();
            assert!((g.values[j][i] - v).norm() < 1e-13);
        }
    }
    assert_eq!(g.realpart()[1][0], g.values[1][0].re);
}

#[test]
fn grid_is_independent_of_thread_count() {
    let b = manufactured_problem("alpha13-poly").unwrap();
    let s = EvalSettings::default();
    let xs = linspace(0.0, 1.0, 7);
    let ts = [0.3, 0.9];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| evaluate_grid(&b.problem, &xs, &ts, &s).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn boundary_values_are_reproduced() {
    let b = manufactured_problem("alpha13-poly").unwrap();
    let exact = b.exact.as_ref().unwrap();
    let s = EvalSettings::default();
    for t in linspace(0.05, 0.95, 10) {
        let v = evaluate_points(&b.problem, &[0.0, 1e-3, 1.0 - 1e-3, 1.0], t, &s).unwrap();
        assert!((v[0] - b.problem.f0.at(t)).norm() < 1e-12);
        assert!((v[3] - b.problem.g0.at(t)).norm() < 1e-12);
        assert!((v[1] - exact.eval(1e-3, t)).norm() < 1e-8, "t={t}");
        assert!((v[2] - exact.eval(1.0 - 1e-3, t)).norm() < 1e-8, "t={t}");
    }
}

#[test]
fn linearity() {
    let s = EvalSettings::default();
    let a = problem(0.5, "sin(pi*x)", "0", "0", Some("x*cos(t)"));
    let b = problem(0.5, "x^2", "0", "t", None);
    let sum = problem(0.5, "sin(pi*x) + x^2", "0", "t", Some("x*cos(t)"));
    let xs = [0.1, 0.45, 0.9];
    for t in [0.2, 0.7] {
        let va = evaluate_points(&a, &xs, t, &s).unwrap();
        let vb = evaluate_points(&b, &xs, t, &s).unwrap();
        let vs = evaluate_points(&sum, &xs, t, &s).unwrap();
        for i in 0..xs.len() {
            let want = va[i] + vb[i];
            assert!((vs[i] - want).norm() <= 1e-8 * want.norm().max(1e-3), "t={t} x={}", xs[i]);
        }
    }
}

#[test]
fn contour_invariance_in_eta() {
    let b = manufactured_problem("alpha0-poly").unwrap();
    let xs = linspace(0.0, 1.0, 11);
    let ts = linspace(0.1, 1.0, 4);
    let base = evaluate_grid(&b.problem, &xs, &ts, &EvalSettings::default()).unwrap();
    let moved = EvalSettings {
        contour: ContourOverrides { eta: Some(0.6), ..Default::default() },
        ..EvalSettings::default()
    };
    let other = evaluate_grid(&b.problem, &xs, &ts, &moved).unwrap();
    assert!(max_error(&base, Reference::Grid(&other)).unwrap() <= 1e-6);
}

#[test]
fn truncation_errors_fall_with_theta_max() {
    let b = manufactured_problem("alpha0-poly").unwrap();
    let exact = b.exact.as_ref().unwrap();
    let xs = linspace(0.0, 1.0, 9);
    let ts = linspace(0.0, 1.0, 5);
    let mut last = f64::INFINITY;
    for tm in [2.0, 4.0, 6.0, 8.0] {
        let s = EvalSettings {
            contour: ContourOverrides { theta_max: Some(tm), ..Default::default() },
            ..EvalSettings::default()
        };
        let e = max_error(&evaluate_grid(&b.problem, &xs, &ts, &s).unwrap(), Reference::Exact(exact)).unwrap();
        assert!(e <= 2.0 * last, "θ_max={tm}: {e:e} after {last:e}");
        last = e;
    }
    assert!(last <= 1e-4);
}

#[test]
fn energy_examples() {
    let xs = linspace(0.0, 1.0, 101);
    let zeros = vec![c(0.0); 101];
    assert_eq!(energy(&xs, &zeros).unwrap(), 0.0);
    let sines: Vec<C64> = xs.iter().map(|&x| c((2.0 * std::f64::consts::PI * x).sin())).collect();
    assert!((energy(&xs, &sines).unwrap() - 0.5).abs() < 1e-8);
    assert!(energy(&xs[..10], &sines[..10]).is_err());
    let mut bent = xs.clone();
    bent[3] += 1e-3;
    assert!(energy(&bent, &sines).is_err());
}

#[test]
fn failing_time_levels_become_nan_rows() {
    let h = DataFunction::from_fn(Arity::XT, |_, t| if t.re > 0.5 { C64::new(f64::NAN, 0.0) } else { C64::new(1.0, 0.0) });
    let p = ProblemSpec::interval(1.0, 0.0, DataFunction::zero(Arity::X), DataFunction::zero(Arity::T), DataFunction::zero(Arity::T), Some(h)).unwrap();
    let g = evaluate_grid(&p, &[0.25, 0.5], &[0.3, 0.8], &EvalSettings::default()).unwrap();
    assert!(g.failures[0].is_none());
    assert!(g.values[0].iter().all(|v| v.re.is_finite()));
    assert!(g.failures[1].is_some());
    assert!(g.values[1].iter().all(|v| v.re.is_nan()));
    assert!(!g.all_finite());
}

#[test]
fn grid_serialisation() {
    let b = manufactured_problem("alpha0-poly").unwrap();
    let g = evaluate_grid(&b.problem, &[0.0, 0.5], &[0.0, 0.25], &EvalSettings::default()).unwrap();
    let csv = g.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,t,re,im");
    assert_eq!(lines.len(), 5);
    let fields: Vec<f64> = lines[4].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[0], 0.5);
    assert_eq!(fields[1], 0.25);
    assert!((fields[2] - 0.75).abs() < 1e-10);
    let m = g.to_gnuplot_matrix();
    let rows: Vec<&str> = m.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("2 "));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rules_are_sorted_and_sum_to_the_length(tm in 0.1f64..60.0, panels in 1usize..40, order in 2usize..20) {
        let r = quadrature_rule(tm, panels, order).unwrap();
        let total: f64 = r.weights.iter().sum();
        prop_assert!((total - 2.0 * tm).abs() <= 1e-12 * tm.max(1.0));
        prop_assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(r.weights.iter().all(|&w| w > 0.0));
    }
}
