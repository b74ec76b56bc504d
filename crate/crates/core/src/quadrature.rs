//! Equal-area and Gauss-product quadrature rules on the unit sphere `S^{k-1}`,
//! normalized to total weight one.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::BoundaryPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Equally spaced points on the circle (k = 2 only).
    Circle,
    /// Spherical Fibonacci spiral with equal weights (k = 3 only).
    Fibonacci,
    /// Gauss–Gegenbauer rules in each polar angle times an equispaced azimuth.
    GaussProduct,
}

impl QuadratureRule {
    pub fn default_for(k: usize) -> Self {
        match k {
            2 => Self::Circle,
            3 => Self::Fibonacci,
            _ => Self::GaussProduct,
        }
    }
}

/// Nodes and weights of a sphere rule.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub rule: QuadratureRule,
    pub weights: Vec<f64>,
    pub points: Vec<BoundaryPoint>,
    /// Largest total polynomial degree integrated exactly (0 for Fibonacci,
    /// which is only asymptotically exact).
    pub exact_degree: usize,
}

impl SphereRule {
    /// Builds a rule with approximately `n` nodes on `S^{k-1}`.
    pub fn new(k: usize, rule: QuadratureRule, n: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("sphere dimension k = {k} < 2")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("node count must be positive".into()));
        }
        match (rule, k) {
            (QuadratureRule::Circle, 2) => Ok(circle(n)),
            (QuadratureRule::Fibonacci, 3) => Ok(fibonacci(n)),
            (QuadratureRule::GaussProduct, _) => Ok(gauss_product(k, n)),
            _ => Err(Error::InvalidParameter(format!("rule {rule:?} is not available for k = {k}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: Fn(&DVector<f64>) -> f64>(&self, f: F) -> f64 {
        self.weights.iter().zip(&self.points).map(|(w, p)| w * f(p.direction())).sum()
    }
}

fn circle(n: usize) -> SphereRule {
    let points = (0..n)
        .map(|i| {
            let a = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            BoundaryPoint::normalized(DVector::from_column_slice(&[a.cos(), a.sin()])).unwrap()
        })
        .collect();
    SphereRule { rule: QuadratureRule::Circle, weights: vec![1.0 / n as f64; n], points, exact_degree: n - 1 }
}

fn fibonacci(n: usize) -> SphereRule {
    let golden = PI * (3.0 - 5.0_f64.sqrt());
    let points = (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = ((1.0 - z) * (1.0 + z)).sqrt();
            let a = golden * i as f64;
            BoundaryPoint::normalized(DVector::from_column_slice(&[r * a.cos(), r * a.sin(), z])).unwrap()
        })
        .collect();
    SphereRule { rule: QuadratureRule::Fibonacci, weights: vec![1.0 / n as f64; n], points, exact_degree: 0 }
}

/// Gauss rule for the weight `(1 - t²)^a` on `[-1, 1]` by Golub–Welsch;
/// weights are normalized to sum to one.
pub fn gauss_gegenbauer(n: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::zeros(n, n);
    for j in 1..n {
        let jf = j as f64;
        let s = 2.0 * jf + 2.0 * a;
        let num = 4.0 * jf * (jf + a) * (jf + a) * (jf + 2.0 * a);
        let den = s * s * (s + 1.0) * (s - 1.0);
        let b = (num / den).sqrt();
        jac[(j, j - 1)] = b;
        jac[(j - 1, j)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    (pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1 / total).collect())
}

fn gauss_product(k: usize, n: usize) -> SphereRule {
    let d = k - 1; // number of angles
    let per = ((n as f64 / 2.0).powf(1.0 / d as f64)).round().max(1.0) as usize;
    let azimuth = 2 * per;
    let polar: Vec<(Vec<f64>, Vec<f64>)> =
        (1..d).map(|j| gauss_gegenbauer(per, (d - j - 1) as f64 / 2.0)).collect();
    let mut weights = Vec::new();
    let mut points = Vec::new();
    let total = per.pow((d - 1) as u32) * azimuth;
    for idx in 0..total {
        let mut rest = idx;
        let mut coords = vec![0.0; k];
        let mut w = 1.0;
        let mut sin_prod = 1.0;
        for (j, (nodes, ws)) in polar.iter().enumerate() {
            let i = rest % per;
            rest /= per;
            let t = nodes[i];
            w *= ws[i];
            coords[j] = sin_prod * t;
            sin_prod *= ((1.0 - t) * (1.0 + t)).sqrt();
        }
        let phi = 2.0 * PI * (rest as f64 + 0.5) / azimuth as f64;
        coords[k - 2] = sin_prod * phi.cos();
        coords[k - 1] = sin_prod * phi.sin();
        weights.push(w / azimuth as f64);
        points.push(BoundaryPoint::normalized(DVector::from_vec(coords)).unwrap());
    }
    SphereRule { rule: QuadratureRule::GaussProduct, weights, points, exact_degree: 2 * per - 1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Moment of the normalized uniform measure on `S^{k-1}`:
    /// `E[∏ x_i^{2a_i}] = ∏ (2a_i - 1)!! / (k (k+2) ⋯ (k + 2|a| - 2))`.
    fn sphere_moment(k: usize, exps: &[usize]) -> f64 {
        let dfact = |m: usize| -> f64 {
            let mut r = 1.0;
            let mut j = m as i64 * 2 - 1;
            while j > 1 {
                r *= j as f64;
                j -= 2;
            }
            r
        };
        let num: f64 = exps.iter().map(|&a| dfact(a)).product();
        let total: usize = exps.iter().sum();
        let den: f64 = (0..total).map(|j| (k + 2 * j) as f64).product();
        num / den
    }

    fn monomial(x: &DVector<f64>, exps: &[usize]) -> f64 {
        exps.iter().enumerate().map(|(i, &a)| x[i].powi(2 * a as i32)).product()
    }

    #[test]
    fn gegenbauer_rule_integrates_polynomials() {
        // Legendre: ∫ t^4 dt / 2 = 1/5
        let (t, w) = gauss_gegenbauer(5, 0.0);
        let m4: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(4)).sum();
        assert!((m4 - 0.2).abs() < 1e-14);
        // weight (1-t²)^{1/2}: normalized second moment 1/4
        let (t, w) = gauss_gegenbauer(4, 0.5);
        let m2: f64 = t.iter().zip(&w).map(|(t, w)| w * t * t).sum();
        assert!((m2 - 0.25).abs() < 1e-14);
    }

    #[test]
    fn product_rules_are_exact_to_their_degree() {
        for k in [3usize, 4, 5] {
            let rule = SphereRule::new(k, QuadratureRule::GaussProduct, 600).unwrap();
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            let mut exps = vec![0usize; k];
            exps[0] = 2;
            exps[k - 1] = 1;
            assert!(4 + 2 <= rule.exact_degree);
            let approx = rule.integrate(|x| monomial(x, &exps));
            assert!((approx - sphere_moment(k, &exps)).abs() < 1e-10, "k={k}");
            let odd = rule.integrate(|x| x[0] * x[1] * x[1]);
            assert!(odd.abs() < 1e-12);
        }
    }

    #[test]
    fn fibonacci_and_circle_rules() {
        let f = SphereRule::new(3, QuadratureRule::Fibonacci, 2000).unwrap();
        assert_eq!(f.len(), 2000);
        let m = f.integrate(|x| x[2] * x[2]);
        assert!((m - 1.0 / 3.0).abs() < 1e-5);
        let c = SphereRule::new(2, QuadratureRule::Circle, 16).unwrap();
        let m = c.integrate(|x| x[0].powi(4));
        assert!((m - sphere_moment(2, &[2, 0])).abs() < 1e-14);
        assert!(SphereRule::new(4, QuadratureRule::Fibonacci, 10).is_err());
    }
}
