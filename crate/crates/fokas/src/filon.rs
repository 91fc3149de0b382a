//! Gauss–Legendre rules and Filon-type product integration of
//! `e^{z u} f(u)` on `[-1, 1]`.
//!
//! The smooth factor `f` is sampled at the 16 Gauss–Legendre nodes and
//! expanded in Legendre polynomials; the exponential is integrated exactly
//! against each polynomial. Accuracy therefore depends only on how well a
//! degree-15 polynomial represents `f`, not on the size of `z`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

/// Nodes per panel.
pub const ORDER: usize = 16;

/// Moments with `|z|` above this use forward recurrence, which is stable
/// once `|z|` exceeds the highest degree.
const RECURRENCE_THRESHOLD: f64 = 24.0;
/// Below this the moments come from a high-order quadrature, between the two
/// thresholds from backward (Miller) recurrence.
const QUADRATURE_THRESHOLD: f64 = 1.0;
const MOMENT_NODES: usize = 64;

/// Sorted Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n).expect("rule order must be positive");
    let rule = GaussLegendre::new(n);
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `P_0(u), ..., P_{N-1}(u)` by the three-term recurrence.
pub fn legendre_values<const N: usize>(u: f64) -> [f64; N] {
    let mut p = [0.0; N];
    if N == 0 {
        return p;
    }
    p[0] = 1.0;
    if N > 1 {
        p[1] = u;
    }
    for n in 1..N.saturating_sub(1) {
        let nf = n as f64;
        p[n + 1] = ((2.0 * nf + 1.0) * u * p[n] - nf * p[n - 1]) / (nf + 1.0);
    }
    p
}

struct Tables {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
    /// `proj[n][i] = (2n+1)/2 * w_i * P_n(u_i)`: nodal values to Legendre coefficients.
    proj: [[f64; ORDER]; ORDER],
    /// High-order rule for small-`z` moments: `(u_j, w_j P_n(u_j))`.
    moment_rule: Vec<(f64, [f64; ORDER])>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let (u, w) = gauss_legendre(ORDER);
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        nodes.copy_from_slice(&u);
        weights.copy_from_slice(&w);
        let mut proj = [[0.0; ORDER]; ORDER];
        for i in 0..ORDER {
            let p = legendre_values::<ORDER>(nodes[i]);
            for n in 0..ORDER {
                proj[n][i] = (2.0 * n as f64 + 1.0) / 2.0 * weights[i] * p[n];
            }
        }
        let (mu, mw) = gauss_legendre(MOMENT_NODES);
        let moment_rule = mu
            .iter()
            .zip(&mw)
            .map(|(&uj, &wj)| {
                let mut row = legendre_values::<ORDER>(uj);
                row.iter_mut().for_each(|v| *v *= wj);
                (uj, row)
            })
            .collect();
        Tables {
            nodes,
            weights,
            proj,
            moment_rule,
        }
    })
}

/// The 16 panel nodes on `[-1, 1]`.
pub fn nodes() -> &'static [f64; ORDER] {
    &tables().nodes
}

/// The 16 panel weights on `[-1, 1]`.
pub fn weights() -> &'static [f64; ORDER] {
    &tables().weights
}

/// Legendre coefficients of the degree-15 interpolant through nodal values.
pub fn coefficients(f: &[Complex64; ORDER]) -> [Complex64; ORDER] {
    let t = tables();
    let mut c = [Complex64::new(0.0, 0.0); ORDER];
    for n in 0..ORDER {
        c[n] = t.proj[n]
            .iter()
            .zip(f)
            .map(|(&p, &v)| v * p)
            .sum::<Complex64>();
    }
    c
}

/// Which endpoint of `[-1, 1]` the exponential of an anchored moment is
/// normalised to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// Values are `e^{-z} m_n(z)`; used when `Re z >= 0`.
    Right,
    /// Values are `e^{z} m_n(z)`; used when `Re z < 0`.
    Left,
}

/// Anchored Legendre moments of `e^{z u}` on `[-1, 1]`, for `n < 16`.
///
/// With `m_n(z) = ∫ e^{z u} P_n(u) du`, the returned values are
/// `e^{-z} m_n(z)` (right anchor, `Re z >= 0`) or `e^{z} m_n(z)` (left
/// anchor, `Re z < 0`). The integrand is then bounded by one, and the
/// caller multiplies by the exponential evaluated at the matching panel
/// endpoint, so no large phase is ever formed twice.
pub fn moments(z: Complex64) -> ([Complex64; ORDER], Anchor) {
    let anchor = if z.re >= 0.0 { Anchor::Right } else { Anchor::Left };
    let sign = match anchor {
        Anchor::Right => -1.0,
        Anchor::Left => 1.0,
    };
    let mut m = [Complex64::new(0.0, 0.0); ORDER];
    let r = z.norm();
    if r > QUADRATURE_THRESHOLD && r <= RECURRENCE_THRESHOLD {
        miller(z, sign, &mut m);
        return (m, anchor);
    }
    if r <= RECURRENCE_THRESHOLD {
        for (u, row) in &tables().moment_rule {
            let e = (z * (u + sign)).exp();
            for n in 0..ORDER {
                m[n] += e * row[n];
            }
        }
        return (m, anchor);
    }
    // e = e^{-2z} (right) or e^{2z} (left); both have modulus <= 1
    let e = (2.0 * sign * z).exp();
    let zi = z.inv();
    // anchored e^{z}-e^{-z} and e^{z}+e^{-z}
    let (d, s) = match anchor {
        Anchor::Right => (1.0 - e, 1.0 + e),
        Anchor::Left => (e - 1.0, e + 1.0),
    };
    m[0] = d * zi;
    m[1] = (s - d * zi) * zi;
    for n in 1..ORDER - 1 {
        m[n + 1] = m[n - 1] - (2.0 * n as f64 + 1.0) * zi * m[n];
    }
    (m, anchor)
}

/// `m_n` is the minimal solution of `m_{n+1} = m_{n-1} - (2n+1)/z m_n`, so it
/// can be generated downwards from a far start and normalised by `m_0`.
fn miller(z: Complex64, sign: f64, m: &mut [Complex64; ORDER]) {
    let zi = z.inv();
    let start = ORDER + 40 + 2 * z.norm().ceil() as usize;
    let mut hi = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1.0, 0.0);
    for n in (1..=start).rev() {
        // m_{n-1} = m_{n+1} + (2n+1)/z m_n
        let lo = hi + (2.0 * n as f64 + 1.0) * zi * cur;
        hi = cur;
        cur = lo;
        if n - 1 < ORDER {
            m[n - 1] = cur;
        }
        let a = cur.re.abs().max(cur.im.abs());
        if a > 1e100 {
            let s = 1.0 / a;
            cur *= s;
            hi *= s;
            for v in m.iter_mut() {
                *v *= s;
            }
        }
    }
    // anchored m_0 = (1 - e^{-2z})/z (right) or (e^{2z} - 1)/z (left)
    let e = (2.0 * sign * z).exp();
    let m0 = if sign < 0.0 { (1.0 - e) * zi } else { (e - 1.0) * zi };
    let scale = m0 / m[0];
    for v in m.iter_mut() {
        *v *= scale;
    }
}

/// `Σ_n c_n m_n`.
#[inline]
pub fn contract(c: &[Complex64; ORDER], m: &[Complex64; ORDER]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..ORDER {
        acc += c[n] * m[n];
    }
    acc
}

/// Size of the two highest Legendre coefficients relative to the largest
/// one, used to decide whether a panel resolves its data.
pub fn tail_ratio(c: &[Complex64; ORDER]) -> f64 {
    let max = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    (c[ORDER - 1].norm() + c[ORDER - 2].norm()) / max
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference_moments(z: Complex64) -> Vec<Complex64> {
        let (u, w) = gauss_legendre(400);
        (0..ORDER)
            .map(|n| {
                u.iter()
                    .zip(&w)
                    .map(|(&x, &wx)| {
                        let anchor = if z.re >= 0.0 { -1.0 } else { 1.0 };
                        (z * (x + anchor)).exp() * legendre_values::<ORDER>(x)[n] * wx
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn rule_is_sorted_and_sums_to_two() {
        let w: f64 = weights().iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
        assert!(nodes().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn moments_match_brute_force_on_both_sides_of_threshold() {
        for z in [
            c(0.0, 0.0),
            c(1.5, -2.0),
            c(0.0, 23.9),
            c(0.3, 1.2),
            c(-0.7, 0.8),
            c(5.0, 0.0),
            c(-12.0, 3.0),
            c(0.0, 10.0),
            c(2.0, -17.0),
            c(0.0, 24.5),
            c(-30.0, 5.0),
            c(18.0, 19.0),
            c(40.0, -70.0),
            c(-3.0, 60.0),
        ] {
            let (m, _) = moments(z);
            let r = reference_moments(z);
            let scale = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for n in 0..ORDER {
                assert!(
                    (m[n] - r[n]).norm() <= 1e-13 * scale,
                    "z={z} n={n} got {} want {}",
                    m[n],
                    r[n]
                );
            }
        }
    }

    #[test]
    fn filon_integrates_oscillatory_polynomial_exactly() {
        // ∫ e^{i 500 u} u^3 du against the closed form through moments of monomials
        let z = c(0.0, 500.0);
        let f: [Complex64; ORDER] = std::array::from_fn(|i| c(nodes()[i].powi(3), 0.0));
        let (m, anchor) = moments(z);
        assert_eq!(anchor, Anchor::Right);
        let got = contract(&coefficients(&f), &m) * z.exp();
        // antiderivative of u^3 e^{zu}: e^{zu}(u^3/z - 3u^2/z^2 + 6u/z^3 - 6/z^4)
        let anti = |u: f64| {
            (z * u).exp() * (u.powi(3) / z - 3.0 * u * u / (z * z) + 6.0 * u / z.powi(3) - 6.0 / z.powi(4))
        };
        let want = anti(1.0) - anti(-1.0);
        assert!((got - want).norm() < 1e-15, "{got} vs {want}");
    }

    #[test]
    fn coefficients_recover_a_polynomial() {
        // 3 P_0 - 2 P_2 + P_5
        let f: [Complex64; ORDER] = std::array::from_fn(|i| {
            let p = legendre_values::<6>(nodes()[i]);
            c(3.0 * p[0] - 2.0 * p[2] + p[5], 0.0)
        });
        let co = coefficients(&f);
        assert!((co[0] - 3.0).norm() < 1e-13);
        assert!((co[2] + 2.0).norm() < 1e-13);
        assert!((co[5] - 1.0).norm() < 1e-13);
        assert!(tail_ratio(&co) < 1e-13);
    }
}
