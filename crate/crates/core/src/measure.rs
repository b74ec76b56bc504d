//! Probability measures on the ideal sphere: finite atomic measures,
//! quadrature discretizations of the visual family, pushforwards and atom
//! detection.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{BoundaryPoint, HPoint};
use crate::quadrature::{QuadratureRule, SphereRule};

/// Tolerance on the total mass of a user-supplied measure.
pub const MASS_TOL: f64 = 1e-10;
/// Angular distance below which points are merged into one atom.
pub const CLUSTER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureTag {
    Atomic,
    Quadrature,
    Mixed,
}

/// A probability measure on `∂H^k`, stored as weighted points. Atoms are
/// user-specified Dirac masses; nodes come from a quadrature rule.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMeasure {
    atoms: Vec<(f64, BoundaryPoint)>,
    nodes: Vec<(f64, BoundaryPoint)>,
    tag: MeasureTag,
}

fn validate(parts: &[(f64, BoundaryPoint)]) -> Result<usize> {
    let k = parts
        .first()
        .map(|p| p.1.dim())
        .ok_or_else(|| Error::InvalidMeasure("empty measure".into()))?;
    for (w, p) in parts {
        if !(*w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidMeasure(format!("non-positive weight {w}")));
        }
        if p.dim() != k {
            return Err(Error::DimensionMismatch { expected: k, found: p.dim() });
        }
    }
    Ok(k)
}

impl BoundaryMeasure {
    /// Builds a measure from atoms and quadrature nodes. Weights must be
    /// positive with total mass one within [`MASS_TOL`]; they are then
    /// rescaled to sum to one exactly (up to rounding). Atoms closer than
    /// [`CLUSTER_TOL`] are merged.
    pub fn new(atoms: Vec<(f64, BoundaryPoint)>, nodes: Vec<(f64, BoundaryPoint)>) -> Result<Self> {
        let all: Vec<(f64, BoundaryPoint)> = atoms.iter().chain(nodes.iter()).cloned().collect();
        validate(&all)?;
        let total: f64 = all.iter().map(|p| p.0).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total} differs from 1")));
        }
        let tag = match (atoms.is_empty(), nodes.is_empty()) {
            (false, true) => MeasureTag::Atomic,
            (true, false) => MeasureTag::Quadrature,
            _ => MeasureTag::Mixed,
        };
        let atoms = merge_atoms(atoms.into_iter().map(|(w, p)| (w / total, p)).collect());
        let nodes = nodes.into_iter().map(|(w, p)| (w / total, p)).collect();
        Ok(Self { atoms, nodes, tag })
    }

    pub fn atomic(atoms: Vec<(f64, BoundaryPoint)>) -> Result<Self> {
        Self::new(atoms, Vec::new())
    }

    pub fn dirac(theta: BoundaryPoint) -> Self {
        Self { atoms: vec![(1.0, theta)], nodes: Vec::new(), tag: MeasureTag::Atomic }
    }

    /// Internal constructor for weights already known to be positive and normalized.
    pub(crate) fn from_nodes_unchecked(nodes: Vec<(f64, BoundaryPoint)>) -> Self {
        Self { atoms: Vec::new(), nodes, tag: MeasureTag::Quadrature }
    }

    pub fn tag(&self) -> MeasureTag {
        self.tag
    }

    pub fn atoms(&self) -> &[(f64, BoundaryPoint)] {
        &self.atoms
    }

    pub fn nodes(&self) -> &[(f64, BoundaryPoint)] {
        &self.nodes
    }

    /// All weighted points, atoms first.
    pub fn iter(&self) -> impl Iterator<Item = &(f64, BoundaryPoint)> {
        self.atoms.iter().chain(self.nodes.iter())
    }

    pub fn len(&self) -> usize {
        self.atoms.len() + self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.iter().next().map(|p| p.1.dim()).unwrap_or(0)
    }

    pub fn total_mass(&self) -> f64 {
        self.iter().map(|p| p.0).sum()
    }

    pub fn integrate<F: Fn(&BoundaryPoint) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(w, p)| w * f(p)).sum()
    }

    /// Serializes as an array of `[weight, [x_1, …, x_k]]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.iter()
                .map(|(w, p)| serde_json::json!([w, p.direction().as_slice()]))
                .collect(),
        )
    }

    /// Parses the [`BoundaryMeasure::to_json`] format as an atomic measure.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let pairs: Vec<(f64, Vec<f64>)> = serde_json::from_value(v.clone())?;
        let atoms = pairs
            .into_iter()
            .map(|(w, x)| Ok((w, BoundaryPoint::new(DVector::from_vec(x))?)))
            .collect::<Result<Vec<_>>>()?;
        Self::atomic(atoms)
    }
}

fn merge_atoms(atoms: Vec<(f64, BoundaryPoint)>) -> Vec<(f64, BoundaryPoint)> {
    let mut out: Vec<(f64, BoundaryPoint)> = Vec::with_capacity(atoms.len());
    for (w, p) in atoms {
        match out.iter_mut().find(|q| q.1.angle_to(&p) <= CLUSTER_TOL) {
            Some(q) => q.0 += w,
            None => out.push((w, p)),
        }
    }
    out
}

/// The visual (Patterson–Sullivan) family of `H^k` discretized by a fixed
/// sphere rule; `μ_O` is the rule itself.
#[derive(Clone, Debug)]
pub struct VisualFamily {
    k: usize,
    rule: SphereRule,
}

impl VisualFamily {
    pub fn new(k: usize, rule: QuadratureRule, nodes: usize) -> Result<Self> {
        Ok(Self { k, rule: SphereRule::new(k, rule, nodes)? })
    }

    /// Default rule for the dimension (circle, Fibonacci, Gauss product).
    pub fn with_nodes(k: usize, nodes: usize) -> Result<Self> {
        Self::new(k, QuadratureRule::default_for(k), nodes)
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn rule(&self) -> &SphereRule {
        &self.rule
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    /// Log-densities `log w_i - (k-1) B(x, θ_i)` before normalization.
    fn log_weights(&self, x: &HPoint) -> Result<Vec<f64>> {
        if x.dim() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, found: x.dim() });
        }
        let n = x.coords().norm();
        let log_a = ((1.0 - n) * (1.0 + n)).ln();
        let delta = (self.k - 1) as f64;
        Ok(self
            .rule
            .weights
            .iter()
            .zip(&self.rule.points)
            .map(|(w, p)| {
                let d2 = (x.coords() - p.direction()).norm_squared();
                w.ln() + delta * (log_a - d2.ln())
            })
            .collect())
    }

    /// Total mass of `Σ w_i e^{-(k-1) B(x, θ_i)}`, which is one up to
    /// quadrature error.
    pub fn raw_mass(&self, x: &HPoint) -> Result<f64> {
        Ok(self.log_weights(x)?.iter().map(|l| l.exp()).sum())
    }

    /// Normalized weights of `μ_x` on the rule's nodes.
    pub fn weights_at(&self, x: &HPoint) -> Result<Vec<f64>> {
        let logs = self.log_weights(x)?;
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v /= total;
        }
        Ok(w)
    }
}

/// `μ_x` as a quadrature measure.
pub fn visual_measure(family: &VisualFamily, x: &HPoint) -> Result<BoundaryMeasure> {
    let w = family.weights_at(x)?;
    Ok(BoundaryMeasure::from_nodes_unchecked(
        w.into_iter().zip(family.rule.points.iter().cloned()).collect(),
    ))
}

/// Image measure under a boundary map: same weights at the mapped points.
pub fn pushforward<F>(beta: &BoundaryMeasure, f: F) -> Result<BoundaryMeasure>
where
    F: Fn(&BoundaryPoint) -> Result<BoundaryPoint>,
{
    let map = |parts: &[(f64, BoundaryPoint)]| -> Result<Vec<(f64, BoundaryPoint)>> {
        parts.iter().map(|(w, p)| Ok((*w, f(p)?))).collect()
    };
    Ok(BoundaryMeasure { atoms: map(&beta.atoms)?, nodes: map(&beta.nodes)?, tag: beta.tag })
}

/// Clusters of points within [`CLUSTER_TOL`] of each other (single linkage),
/// as `(total mass, heaviest member)`, heaviest cluster first.
pub fn atom_clusters(beta: &BoundaryMeasure) -> Vec<(f64, BoundaryPoint)> {
    let pts: Vec<&(f64, BoundaryPoint)> = beta.iter().collect();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    let key = |i: usize| pts[i].1.direction()[0];
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            let (i, j) = (order[a], order[b]);
            if key(j) - key(i) > CLUSTER_TOL {
                break;
            }
            if pts[i].1.angle_to(&pts[j].1) <= CLUSTER_TOL {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut mass = vec![0.0; pts.len()];
    let mut heaviest: Vec<Option<usize>> = vec![None; pts.len()];
    for i in 0..pts.len() {
        let r = find(&mut parent, i);
        mass[r] += pts[i].0;
        if heaviest[r].is_none_or(|h| pts[h].0 < pts[i].0) {
            heaviest[r] = Some(i);
        }
    }
    let mut out: Vec<(f64, BoundaryPoint)> = (0..pts.len())
        .filter_map(|r| heaviest[r].map(|h| (mass[r], pts[h].1.clone())))
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

/// Largest clustered mass and where it sits.
pub fn max_atom_mass(beta: &BoundaryMeasure) -> (f64, Option<BoundaryPoint>) {
    match atom_clusters(beta).into_iter().next() {
        Some((m, p)) => (m, Some(p)),
        None => (0.0, None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{busemann, random_direction, random_point, Isometry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(21)
    }

    #[test]
    fn visual_measure_at_origin_is_the_rule() {
        let fam = VisualFamily::with_nodes(3, 500).unwrap();
        let mu = visual_measure(&fam, &HPoint::origin(3)).unwrap();
        for (w, _) in mu.iter() {
            assert!((w - 1.0 / 500.0).abs() < 1e-15);
        }
    }

    #[test]
    fn visual_weights_are_normalized_and_obey_density_law() {
        let fam = VisualFamily::with_nodes(3, 2000).unwrap();
        let mut r = rng();
        for _ in 0..5 {
            let x = random_point(3, 2.0, &mut r);
            let y = random_point(3, 2.0, &mut r);
            let mx = visual_measure(&fam, &x).unwrap();
            let my = visual_measure(&fam, &y).unwrap();
            assert!((mx.total_mass() - 1.0).abs() < 1e-12);
            assert!(mx.iter().all(|p| p.0 > 0.0));
            let ratios: Vec<f64> = mx
                .iter()
                .zip(my.iter())
                .map(|(a, b)| {
                    let expected = (-2.0 * (busemann(&x, &a.1).unwrap() - busemann(&y, &a.1).unwrap())).exp();
                    a.0 / b.0 / expected
                })
                .collect();
            // ratios equal the common normalization constant
            let c = ratios[0];
            assert!(ratios.iter().all(|q| (q / c - 1.0).abs() < 1e-10));
        }
    }

    /// Monte Carlo estimate of `∫ e^{-2 B(x,θ)} dθ` with uniformly random θ.
    fn monte_carlo_mass(x: &HPoint, samples: usize, r: &mut ChaCha8Rng) -> (f64, f64) {
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..samples {
            let th = random_direction(3, r);
            let v = (-2.0 * busemann(x, &th).unwrap()).exp();
            s += v;
            s2 += v * v;
        }
        let mean = s / samples as f64;
        let var = s2 / samples as f64 - mean * mean;
        (mean, (var / samples as f64).sqrt())
    }

    #[test]
    fn raw_visual_mass_is_one() {
        let mut r = rng();
        let gauss = VisualFamily::new(3, QuadratureRule::GaussProduct, 2000).unwrap();
        let fib = VisualFamily::with_nodes(3, 8000).unwrap();
        for _ in 0..10 {
            let x = random_point(3, 1.0, &mut r);
            assert!((gauss.raw_mass(&x).unwrap() - 1.0).abs() < 1e-6);
            let (mc, se) = monte_carlo_mass(&x, 20_000, &mut r);
            assert!((mc - 1.0).abs() < 5.0 * se);
        }
        for _ in 0..10 {
            let x = random_point(3, 0.2, &mut r);
            assert!((fib.raw_mass(&x).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn family_is_equivariant_in_the_weak_sense() {
        let fam = VisualFamily::new(3, QuadratureRule::GaussProduct, 4000).unwrap();
        let mut r = rng();
        let tests: [fn(&DVector<f64>) -> f64; 5] = [
            |v| v[0],
            |v| v[1] * v[2],
            |v| v[2] * v[2],
            |v| (v[0] + 2.0 * v[1]).sin(),
            |v| (v[0] - v[2]).exp(),
        ];
        for _ in 0..3 {
            let g = Isometry::random(3, 0.7, &mut r);
            let x = random_point(3, 0.7, &mut r);
            let pushed = pushforward(&visual_measure(&fam, &x).unwrap(), |t| g.act_boundary(t)).unwrap();
            let direct = visual_measure(&fam, &g.act(&x).unwrap()).unwrap();
            for f in &tests {
                let a = pushed.integrate(|t| f(t.direction()));
                let b = direct.integrate(|t| f(t.direction()));
                assert!((a - b).abs() < 1e-5, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn pushforward_cases() {
        let mut r = rng();
        let fam = VisualFamily::with_nodes(3, 300).unwrap();
        let mu = visual_measure(&fam, &random_point(3, 1.0, &mut r)).unwrap();
        let same = pushforward(&mu, |t| Ok(t.clone())).unwrap();
        assert_eq!(same, mu);
        let g = Isometry::random(3, 1.0, &mut r);
        let moved = pushforward(&mu, |t| g.act_boundary(t)).unwrap();
        assert_eq!(moved.total_mass(), mu.total_mass());
        let f = |t: &BoundaryPoint| t.direction()[0] * t.direction()[1];
        let oracle: f64 = mu.iter().map(|(w, t)| w * f(&g.act_boundary(t).unwrap())).sum();
        assert!((moved.integrate(f) - oracle).abs() < 1e-12);
        let pole = BoundaryPoint::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let constant = pushforward(&mu, |_| Ok(pole.clone())).unwrap();
        let (m, p) = max_atom_mass(&constant);
        assert!((m - 1.0).abs() < 1e-12);
        assert_eq!(p.unwrap(), pole);
    }

    #[test]
    fn atoms() {
        let a = BoundaryPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        let b = BoundaryPoint::from_slice(&[0.0, 1.0, 0.0]).unwrap();
        let (m, p) = max_atom_mass(&BoundaryMeasure::dirac(a.clone()));
        assert_eq!((m, p.unwrap()), (1.0, a.clone()));
        let beta = BoundaryMeasure::atomic(vec![(0.6, a.clone()), (0.4, b.clone())]).unwrap();
        let (m, p) = max_atom_mass(&beta);
        assert!((m - 0.6).abs() < 1e-15);
        assert_eq!(p.unwrap(), a);
        let fam = VisualFamily::with_nodes(3, 2000).unwrap();
        let (m, _) = max_atom_mass(&visual_measure(&fam, &HPoint::origin(3)).unwrap());
        assert!(m <= 2.0 / 2000.0);
        // duplicates merge, bad weights are rejected
        let dup = BoundaryMeasure::atomic(vec![(0.3, a.clone()), (0.3, a.clone()), (0.4, b.clone())]).unwrap();
        assert_eq!(dup.atoms().len(), 2);
        assert!(BoundaryMeasure::atomic(vec![(0.5, a.clone()), (0.4, b.clone())]).is_err());
        assert!(BoundaryMeasure::atomic(vec![(1.2, a), (-0.2, b)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut r = rng();
        let atoms: Vec<(f64, BoundaryPoint)> =
            (0..4).map(|_| (0.25, random_direction(3, &mut r))).collect();
        let beta = BoundaryMeasure::atomic(atoms).unwrap();
        let back = BoundaryMeasure::from_json(&beta.to_json()).unwrap();
        for (p, q) in beta.iter().zip(back.iter()) {
            assert!((p.0 - q.0).abs() < 1e-15 && p.1.angle_to(&q.1) < 1e-12);
        }
    }
}
