mod common;

use common::adaptive_simpson;
use fokas::spectral::{forcing_transform_h, hat_q0, n_data, time_transform};
use fokas::{manufactured_problem, parse_data_function, Arity, DataFunction, ProblemSpec};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn interval(q0: &str, f0: &str, g0: &str, h: Option<&str>) -> ProblemSpec {
    ProblemSpec::interval(
        1.0,
        0.5,
        parse_data_function(q0, Arity::X).unwrap(),
        parse_data_function(f0, Arity::T).unwrap(),
        parse_data_function(g0, Arity::T).unwrap(),
        h.map(|h| parse_data_function(h, Arity::XT).unwrap()),
    )
    .unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn hat_q0_examples() {
    let zero = interval("0", "0", "0", None);
    assert_eq!(hat_q0(&zero, c(2.0, -1.0)).unwrap(), c(0.0, 0.0));
    let one = interval("1", "0", "0", None);
    assert!((hat_q0(&one, c(0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-14);

    let p = interval("sin(2*pi*x)", "0", "0", None);
    let k = c(1.0, 0.0);
    let want = adaptive_simpson(&|x: f64| (-C64::i() * k * x).exp() * (2.0 * std::f64::consts::PI * x).sin(), 0.0, 1.0, 1e-14);
    assert!((hat_q0(&p, k).unwrap() - want).norm() < 1e-10);
}

#[test]
fn hat_q0_on_the_half_line_continues_analytically() {
    let p = ProblemSpec::half_line(
        parse_data_function("exp(-x)", Arity::X).unwrap(),
        DataFunction::zero(Arity::T),
        None,
    )
    .unwrap();
    for k in [c(0.7, 0.0), c(-2.0, 0.3), c(3.0, 5.0), c(0.5, 40.0)] {
        let want = C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) + C64::i() * k);
        assert!(rel(hat_q0(&p, k).unwrap(), want) < 1e-11, "k={k}");
    }
}

#[test]
fn time_transform_examples() {
    let f = parse_data_function("sin(2*pi*t)", Arity::T).unwrap();
    let v = time_transform(&f, c(0.0, 0.0), 0.5, false).unwrap();
    assert!((v - c(1.0 / std::f64::consts::PI, 0.0)).norm() < 1e-14);
    let zero = DataFunction::zero(Arity::T);
    assert_eq!(time_transform(&zero, c(1.0, 2.0), 0.7, true).unwrap(), c(0.0, 0.0));

    let k = c(1.0, 0.5);
    let t = 1.0;
    let k3 = k * k * k;
    let want = adaptive_simpson(
        &|s: f64| (C64::i() * k3 * (t - s)).exp() * (2.0 * std::f64::consts::PI * s).sin(),
        0.0,
        t,
        1e-14,
    );
    assert!(rel(time_transform(&f, k, t, true).unwrap(), want) < 1e-10);
}

#[test]
fn forcing_transform_examples() {
    let zero = DataFunction::zero(Arity::XT);
    assert_eq!(forcing_transform_h(&zero, c(1.0, 1.0), 0.5, 1.0, false).unwrap(), c(0.0, 0.0));

    let h = parse_data_function("2*pi*(2*x - x^2)*cos(2*pi*t)", Arity::XT).unwrap();
    let v = forcing_transform_h(&h, c(0.0, 0.0), 0.25, 1.0, false).unwrap();
    assert!((v - c(2.0 / 3.0, 0.0)).norm() < 1e-13);

    let k = c(2.0, -1.0);
    let t = 0.5;
    let k3 = k * k * k;
    let want = adaptive_simpson(
        &|s: f64| {
            adaptive_simpson(
                &|x: f64| (-C64::i() * k * x - C64::i() * k3 * s).exp() * h.eval(x, s),
                0.0,
                1.0,
                1e-14,
            )
        },
        0.0,
        t,
        1e-13,
    );
    assert!(rel(forcing_transform_h(&h, k, t, 1.0, false).unwrap(), want) < 1e-9);
}

#[test]
fn n_data_examples() {
    let zero = interval("0", "0", "0", None);
    assert!(n_data(&zero, c(1.0, -1.0), 0.3).unwrap().is_zero());
    let one = interval("1", "0", "0", None);
    for t in [0.0, 0.4, 3.0] {
        assert!((n_data(&one, c(0.0, 0.0), t).unwrap().to_c() - c(1.0, 0.0)).norm() < 1e-14);
    }

    // direct evaluation of q̂0 - k²f̃0 + e^{-ikL}k²g̃0 + H
    let b = manufactured_problem("alpha0-poly").unwrap();
    let p = &b.problem;
    let (k, t) = (c(1.0, -2.0), 0.5);
    let k3 = k * k * k;
    let g = adaptive_simpson(&|s: f64| (-C64::i() * k3 * s).exp() * p.g0.at(s), 0.0, t, 1e-15);
    let h = p.h.as_ref().unwrap();
    let hh = adaptive_simpson(
        &|s: f64| adaptive_simpson(&|x: f64| (-C64::i() * k * x - C64::i() * k3 * s).exp() * h.eval(x, s), 0.0, 1.0, 1e-15),
        0.0,
        t,
        1e-14,
    );
    let want = (-C64::i() * k).exp() * k * k * g + hh;
    assert!(rel(n_data(p, k, t).unwrap().to_c(), want) < 1e-9);
}

#[test]
fn n_data_stays_finite_across_the_contour_range() {
    let b = manufactured_problem("alpha13-poly").unwrap();
    for k in [c(30.0, -50.0), c(-20.0, 50.0), c(0.0, -50.0), c(45.0, 45.0)] {
        let v = n_data(&b.problem, k, 10.0).unwrap();
        assert!(v.is_finite(), "k={k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugation_for_real_data(k in -20.0f64..20.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let p = interval(&format!("{a:?}*x^2 + sin({b:?}*x) + exp(-x)"), "0", "0", None);
        let plus = hat_q0(&p, c(k, 0.0)).unwrap();
        let minus = hat_q0(&p, c(-k, 0.0)).unwrap();
        prop_assert!((minus - plus.conj()).norm() <= 1e-12 * (1.0 + plus.norm()));
    }

    #[test]
    fn n_data_is_linear(re in -6.0f64..6.0, im in -6.0f64..6.0, t in 0.0f64..2.0, a in -2.0f64..2.0) {
        let pa = interval("x^2", "sin(2*pi*t)", &format!("{a:?}*t"), Some("x*cos(t)"));
        let pb = interval(&format!("exp({a:?}*x)"), "t^2", "cos(t)", Some("sin(x + t)"));
        let ps = interval(
            &format!("x^2 + exp({a:?}*x)"),
            "sin(2*pi*t) + t^2",
            &format!("{a:?}*t + cos(t)"),
            Some("x*cos(t) + sin(x + t)"),
        );
        let k = c(re, im);
        let na = n_data(&pa, k, t).unwrap();
        let nb = n_data(&pb, k, t).unwrap();
        let ns = n_data(&ps, k, t).unwrap();
        let scale = na.ln_abs().max(nb.ln_abs());
        let diff = ((na + nb) - ns).ln_abs();
        prop_assert!(diff - scale <= (1e-12f64).ln(), "relative error e^{}", diff - scale);
    }

    #[test]
    fn retarded_equals_plain_times_exponential(re in -3.0f64..3.0, im in -3.0f64..3.0, t in 0.0f64..1.0) {
        let f = parse_data_function("cos(3*t) + t", Arity::T).unwrap();
        let k = c(re, im);
        let plain = time_transform(&f, k, t, false).unwrap();
        let ret = time_transform(&f, k, t, true).unwrap();
        let want = (C64::i() * k * k * k * t).exp() * plain;
        prop_assert!((ret - want).norm() <= 1e-10 * ret.norm().max(want.norm()).max(1e-300));
        let h = parse_data_function("x*sin(t)", Arity::XT).unwrap();
        let hp = forcing_transform_h(&h, k, t, 1.0, false).unwrap();
        let hr = forcing_transform_h(&h, k, t, 1.0, true).unwrap();
        let want = (C64::i() * k * k * k * t).exp() * hp;
        prop_assert!((hr - want).norm() <= 1e-10 * hr.norm().max(want.norm()).max(1e-300));
    }
}
