//! Quadrature on the reference triangle `{(x, y) : x, y >= 0, x + y <= 1}`.
//!
//! Degrees 1 and 2 use the classical symmetric 1- and 3-point rules. Higher
//! degrees use a collapsed (Duffy) tensor product of Gauss–Legendre and
//! Gauss–Jacobi(1, 0) rules, which has positive weights and `ceil((d+1)/2)^2`
//! points for degree `d`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    degree: usize,
    /// Barycentric coordinates `(l0, l1, l2)`; `l1 = x`, `l2 = y`.
    pub points: Vec<[f64; 3]>,
    /// Normalized to sum to one; multiply by the triangle area to integrate.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integral of `f(x, y)` over the reference triangle (area 1/2).
    pub fn integrate_reference(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        0.5 * self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[1], p[2]))
            .sum::<f64>()
    }
}

pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    match degree {
        1 => Ok(QuadratureRule {
            degree,
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
        }),
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            Ok(QuadratureRule {
                degree,
                points: vec![[a, b, b], [b, a, b], [b, b, a]],
                weights: vec![1.0 / 3.0; 3],
            })
        }
        3..=MAX_DEGREE => Ok(collapsed_rule(degree)),
        _ => Err(Error::QuadratureDegree(degree)),
    }
}

/// Shared instance of a rule, built on first use.
pub fn cached_rule(degree: usize) -> Result<&'static QuadratureRule> {
    static RULES: [OnceLock<QuadratureRule>; MAX_DEGREE + 1] = [const { OnceLock::new() }; MAX_DEGREE + 1];
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(Error::QuadratureDegree(degree));
    }
    Ok(RULES[degree].get_or_init(|| quadrature_rule(degree).expect("degree checked")))
}

fn collapsed_rule(degree: usize) -> QuadratureRule {
    let n = (degree + 1).div_ceil(2);
    let (xs, ws) = gauss_jacobi(n, 0.0);
    let (ts, vs) = gauss_jacobi(n, 1.0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (t, v) in ts.iter().zip(&vs) {
        // map [-1,1] -> [0,1]; the (1 - t) Jacobian is the Jacobi weight
        let eta = 0.5 * (1.0 + t);
        for (x, w) in xs.iter().zip(&ws) {
            let s = 0.5 * (1.0 + x);
            let xi = s * (1.0 - eta);
            points.push([1.0 - xi - eta, xi, eta]);
            weights.push(w * v);
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    QuadratureRule {
        degree,
        points,
        weights,
    }
}

/// Jacobi polynomial `P_n^(alpha, 0)` and its derivative at `x`.
fn jacobi(n: usize, alpha: f64, x: f64) -> (f64, f64) {
    let (a, b) = (alpha, 0.0);
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = 0.5 * ((a + b + 2.0) * x + a - b);
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let c = 2.0 * nf + a + b;
    let dp = (nf * (a - b - c * x) * p1 + 2.0 * (nf + a) * (nf + b) * p0) / (c * (1.0 - x * x));
    (p1, dp)
}

/// Gauss–Jacobi nodes and weights for weight `(1 - x)^alpha` on `[-1, 1]`.
fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    // bracket the n simple roots on a fine grid, then bisect to full precision
    let grid = 4000;
    let f = |x: f64| jacobi(n, alpha, x).0;
    let mut nodes = Vec::with_capacity(n);
    let mut prev_x = -1.0 + 1e-14;
    let mut prev_f = f(prev_x);
    for k in 1..=grid {
        let x = -1.0 + 2.0 * k as f64 / grid as f64 - if k == grid { 1e-14 } else { 0.0 };
        let fx = f(x);
        if (prev_f < 0.0) != (fx < 0.0) {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (f(lo) < 0.0) == (f(mid) < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-17 {
                    break;
                }
            }
            nodes.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_f = fx;
    }
    assert_eq!(nodes.len(), n, "missed a Gauss–Jacobi root");
    // 2^(a+1) Gamma(n+a+1) Gamma(n+1) / (Gamma(n+a+1) n!) collapses to 2^(a+1) for beta = 0
    let scale = 2f64.powf(alpha + 1.0);
    let weights = nodes
        .iter()
        .map(|&x| {
            let dp = jacobi(n, alpha, x).1;
            scale / ((1.0 - x * x) * dp * dp)
        })
        .collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
    fn monomial(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn every_degree_is_exact_for_its_monomials() {
        for d in 1..=MAX_DEGREE {
            let r = quadrature_rule(d).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0), "degree {d}");
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for p in &r.points {
                assert!(p.iter().all(|&l| l >= 0.0));
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let q = r.integrate_reference(|x, y| x.powi(a as i32) * y.powi(b as i32));
                    let exact = monomial(a, b);
                    assert!(
                        (q - exact).abs() <= 1e-13 * exact.max(1e-3),
                        "degree {d}: x^{a} y^{b}: {q} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn degree_one_is_the_centroid() {
        let r = quadrature_rule(1).unwrap();
        assert_eq!(r.points, vec![[1.0 / 3.0; 3]]);
        assert_eq!(r.weights, vec![1.0]);
    }

    #[test]
    fn degree_two_has_three_points() {
        let r = quadrature_rule(2).unwrap();
        assert_eq!(r.len(), 3);
        assert!((r.integrate_reference(|x, _| x * x) - 1.0 / 12.0).abs() < 1e-15);
        assert!((r.integrate_reference(|x, y| x * y) - 1.0 / 24.0).abs() < 1e-15);
        assert!((r.integrate_reference(|_, y| y * y) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn degree_seven_integrates_constant_to_half() {
        let r = quadrature_rule(7).unwrap();
        assert_eq!(r.len(), 16);
        assert!((r.integrate_reference(|_, _| 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unsupported_degrees() {
        assert!(matches!(quadrature_rule(0), Err(Error::QuadratureDegree(0))));
        assert!(quadrature_rule(11).is_err());
    }
}
