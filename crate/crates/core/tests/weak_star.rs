//! Barycenters of mollified atomic measures converge to the barycenter of the
//! atomic limit; the limit itself is located by a grid search in the ball.

use hyperrigid::barycenter::{barycenter, weak_star_continuity_check, SolverConfig};
use hyperrigid::hyperbolic::{BoundaryPoint, HPoint};
use hyperrigid::measure::BoundaryMeasure;
use nalgebra::{DVector, Vector3};

const RINGS: usize = 6;
const PER_RING: usize = 16;

fn unit(v: [f64; 3]) -> Vector3<f64> {
    Vector3::from(v).normalize()
}

/// Orthonormal pair spanning the plane orthogonal to `c`.
fn frame(c: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let a = if c.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (a - c * c.dot(&a)).normalize();
    (e1, c.cross(&e1))
}

/// Mass `w` spread over the spherical cap of angular radius `rho` around `c`,
/// discretised on rings with weights proportional to the ring's circumference.
fn cap(w: f64, c: &Vector3<f64>, rho: f64) -> Vec<(f64, BoundaryPoint)> {
    let (e1, e2) = frame(c);
    let mut pts = Vec::new();
    let mut total = 0.0;
    for j in 0..RINGS {
        let polar = rho * (j as f64 + 0.5) / RINGS as f64;
        for i in 0..PER_RING {
            let az = 2.0 * std::f64::consts::PI * i as f64 / PER_RING as f64;
            let p = c * polar.cos() + (e1 * az.cos() + e2 * az.sin()) * polar.sin();
            pts.push((polar.sin(), p));
            total += polar.sin();
        }
    }
    pts.into_iter()
        .map(|(s, p)| (w * s / total, BoundaryPoint::from_slice(p.as_slice()).unwrap()))
        .collect()
}

/// `Σ w log(|x - θ|² / (1 - |x|²))`, the Busemann sum in ball coordinates.
fn busemann_sum(atoms: &[(f64, Vector3<f64>)], x: &Vector3<f64>) -> f64 {
    let s = 1.0 - x.norm_squared();
    atoms.iter().map(|(w, t)| w * ((x - t).norm_squared() / s).ln()).sum()
}

fn grid_minimiser(atoms: &[(f64, Vector3<f64>)]) -> Vector3<f64> {
    let mut best = Vector3::zeros();
    let mut best_val = busemann_sum(atoms, &best);
    let mut h = 0.02;
    let mut half = 48i32;
    let mut center = best;
    while h > 1e-8 {
        for i in -half..=half {
            for j in -half..=half {
                for l in -half..=half {
                    let x = center + Vector3::new(i as f64, j as f64, l as f64) * h;
                    if x.norm() >= 0.96 {
                        continue;
                    }
                    let v = busemann_sum(atoms, &x);
                    if v < best_val {
                        best_val = v;
                        best = x;
                    }
                }
            }
        }
        center = best;
        h /= 10.0;
        half = 30;
    }
    best
}

#[test]
fn mollified_three_atom_measures_converge() {
    let limit_atoms = [
        (0.4, unit([1.0, 0.2, 0.1])),
        (0.35, unit([-0.3, 1.0, 0.4])),
        (0.25, unit([0.1, -0.5, -1.0])),
    ];
    let limit = BoundaryMeasure::atomic(
        limit_atoms.iter().map(|(w, c)| (*w, BoundaryPoint::from_slice(c.as_slice()).unwrap())).collect(),
    )
    .unwrap();
    let cfg = SolverConfig::default();

    let oracle = grid_minimiser(&limit_atoms);
    let solved = barycenter(&limit, &cfg).unwrap();
    let p = solved.interior().expect("no dominant atom");
    let ball = HPoint::new(DVector::from_column_slice(oracle.as_slice())).unwrap();
    let gap = hyperrigid::hyperbolic::distance(p, &ball).unwrap();
    assert!(gap < 1e-5, "solver and grid oracle differ by {gap}");

    let sequence: Vec<BoundaryMeasure> = (1..=10)
        .map(|n| {
            let rho = 0.4 * 0.5f64.powi(n);
            let atoms = limit_atoms.iter().flat_map(|(w, c)| cap(*w, c, rho)).collect();
            BoundaryMeasure::atomic(atoms).unwrap()
        })
        .collect();
    let report = weak_star_continuity_check(&sequence, &limit, &cfg).unwrap();
    assert!(report.max_tail_deviation <= 1e-4, "{report:?}");
    assert!(report.tail_nonincreasing, "{report:?}");
    assert!(report.deviations[0] > 1e3 * report.deviations[9]);
}
