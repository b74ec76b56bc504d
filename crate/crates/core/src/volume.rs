//! Volumes of shape solutions, deformation paths toward shape degenerations
//! and random scans of the gluing variety.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dilog::bloch_wigner_with_error;
use crate::error::{Error, Result};
use crate::holonomy::{holonomy_from_shapes, Holonomy};
use crate::hyperbolic::translation_length;
use crate::triangulation::{complete_structure, solve_gluing, IdealTriangulation, NewtonConfig, ShapeVector};

/// Volume of the regular ideal tetrahedron, `3 Л(π/3)`.
pub const REGULAR_TETRAHEDRON_VOLUME: f64 = 1.0149416064096536;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeValue {
    pub value: f64,
    pub error_estimate: f64,
}

/// `Σ D(z_i)`, signed.
pub fn volume_of_shapes(tri: &IdealTriangulation, z: &ShapeVector) -> Result<VolumeValue> {
    if z.len() != tri.len() {
        return Err(Error::DimensionMismatch { expected: tri.len(), found: z.len() });
    }
    let mut value = 0.0;
    let mut err = 0.0;
    for (i, s) in z.0.iter().enumerate() {
        let d = bloch_wigner_with_error(*s).map_err(|_| Error::PoleInput { index: i, value: format!("{s}") })?;
        value += d.value;
        err += d.error_estimate;
    }
    Ok(VolumeValue { value, error_estimate: err })
}

/// Where the prescribed shape is sent along a deformation path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degeneration {
    Zero,
    One,
    Infinity,
}

/// A curve in the gluing variety: the shape of `tet` moves from its complete
/// value `z_c` toward `target`, reaching distance `gap·|z_c - target|` at
/// `t = 1`; the other shapes follow by solving the edge equations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathDirection {
    pub tet: usize,
    pub target: Degeneration,
    pub gap: f64,
}

impl Default for PathDirection {
    fn default() -> Self {
        Self { tet: 0, target: Degeneration::One, gap: 1e-3 }
    }
}

impl PathDirection {
    fn prescribed(&self, zc: Complex64, t: f64) -> Complex64 {
        let s = self.gap.powf(t);
        match self.target {
            Degeneration::Zero => zc * s,
            Degeneration::One => Complex64::new(1.0, 0.0) + (zc - 1.0) * s,
            Degeneration::Infinity => zc / s,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PathPoint {
    pub t: f64,
    pub shapes: ShapeVector,
    /// Straight-map volume of the shape solution.
    pub volume: VolumeValue,
    pub deficit: f64,
    pub holonomy: Holonomy,
    pub translation_lengths: Vec<f64>,
    pub edge_residual: f64,
    /// Minimal distance of a shape to `{0, 1, ∞}`.
    pub degeneration_distance: f64,
}

#[derive(Clone, Debug)]
pub struct DeformationPath {
    pub complete: ShapeVector,
    pub complete_volume: f64,
    pub points: Vec<PathPoint>,
    /// Smallest drop `V(t_j) - V(t_{j+1})` between consecutive points.
    pub min_volume_drop: f64,
    /// Smallest deficit among points with degeneration distance below
    /// [`NEAR_IDEAL_DISTANCE`] (`None` if the path never gets there).
    pub near_ideal_epsilon: Option<f64>,
    /// Total number of step halvings used by the continuation.
    pub halvings: usize,
}

pub const NEAR_IDEAL_DISTANCE: f64 = 1e-2;
const MAX_HALVINGS: usize = 20;

/// Follows the curve `t ↦ z(t)`, `t = j/steps`, by continuation with a Newton
/// corrector on the edge equations (completeness released).
pub fn deformation_path(tri: &IdealTriangulation, direction: PathDirection, steps: usize) -> Result<DeformationPath> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    if direction.tet >= tri.len() || !(direction.gap > 0.0 && direction.gap < 1.0) {
        return Err(Error::InvalidParameter("path direction out of range".into()));
    }
    let complete = complete_structure(tri)?;
    let vmax = volume_of_shapes(tri, &complete)?.value;
    let zc = complete.0[direction.tet];
    let cfg = NewtonConfig { complete: false, fixed: Some(direction.tet), tol: 1e-13, max_iter: 60 };
    let mut current = complete.clone();
    let mut t_cur = 0.0;
    let mut points = Vec::with_capacity(steps + 1);
    let mut halvings = 0;
    for j in 0..=steps {
        let t_target = j as f64 / steps as f64;
        let mut h = t_target - t_cur;
        let mut local_halvings = 0;
        while t_cur < t_target {
            let t_next = (t_cur + h).min(t_target);
            let mut guess = current.clone();
            guess.0[direction.tet] = direction.prescribed(zc, t_next);
            match solve_gluing(tri, &guess, &cfg) {
                Ok((z, _)) if z.is_geometric() || !current.is_geometric() => {
                    current = z;
                    t_cur = t_next;
                }
                _ => {
                    local_halvings += 1;
                    halvings += 1;
                    if local_halvings > MAX_HALVINGS {
                        return Err(Error::ContinuationStall { t: t_cur, halvings: local_halvings });
                    }
                    h *= 0.5;
                }
            }
        }
        let volume = volume_of_shapes(tri, &current)?;
        let holonomy = holonomy_from_shapes(tri, &current)?;
        let translation_lengths = holonomy.representation.generators().iter().map(translation_length).collect();
        let edge_residual = tri.edge_residuals(&current)?.iter().map(|r| r.norm()).fold(0.0, f64::max);
        points.push(PathPoint {
            t: t_target,
            deficit: vmax - volume.value,
            degeneration_distance: current.degeneration_distance(),
            shapes: current.clone(),
            volume,
            holonomy,
            translation_lengths,
            edge_residual,
        });
    }
    let min_volume_drop =
        points.windows(2).map(|w| w[0].volume.value - w[1].volume.value).fold(f64::INFINITY, f64::min);
    let near_ideal_epsilon = points
        .iter()
        .filter(|p| p.degeneration_distance < NEAR_IDEAL_DISTANCE)
        .map(|p| p.deficit)
        .reduce(f64::min);
    Ok(DeformationPath { complete, complete_volume: vmax, points, min_volume_drop, near_ideal_epsilon, halvings })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomScanReport {
    pub attempts: usize,
    pub solutions: usize,
    pub complete_volume: f64,
    pub max_volume: f64,
    /// Distance to the complete solution of the maximizing sample.
    pub argmax_distance: f64,
    /// Deficit threshold below which a sample counts as attaining the maximum.
    pub equality_threshold: f64,
    pub near_equality: usize,
    /// Largest distance to the complete solution among near-equality samples.
    pub max_near_equality_distance: f64,
    pub pass: bool,
}

const MAX_ATTEMPT_FACTOR: usize = 10;

/// `samples` solutions of the gluing variety (edge equations only, at most
/// ten attempts per requested solution): the shape of tetrahedron
/// 0 is drawn at random, half of the samples uniformly in a box of the upper
/// half-plane and half at log-uniform distance `10^{-8}..1` from the complete
/// value; the others are solved by Newton. Checks `Vol ≤ Vol(M) + 1e-9` and
/// that deficits below `equality_threshold` only occur within `1e-6` of the
/// complete solution (either the solution or its complex conjugate).
pub fn random_solution_scan(
    tri: &IdealTriangulation,
    samples: usize,
    seed: u64,
    equality_threshold: f64,
) -> Result<RandomScanReport> {
    let complete = complete_structure(tri)?;
    let vmax = volume_of_shapes(tri, &complete)?.value;
    let cfg = NewtonConfig { complete: false, fixed: Some(0), tol: 1e-13, max_iter: 80 };
    let attempt = |i: usize| -> Option<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        let z0 = if i % 2 == 0 {
            Complex64::new(rng.random_range(-2.0..3.0), rng.random_range(1e-3..3.0))
        } else {
            let r = 10f64.powf(rng.random_range(-8.0..0.0));
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            complete.0[0] + Complex64::from_polar(r, a)
        };
        let mut start = ShapeVector(
            (0..tri.len()).map(|_| Complex64::new(rng.random_range(-1.0..2.0), rng.random_range(0.1..2.0))).collect(),
        );
        start.0[0] = z0;
        let (z, _) = solve_gluing(tri, &start, &cfg).ok()?;
        let v = volume_of_shapes(tri, &z).ok()?.value;
        let d = z.distance(&complete).min(z.distance(&complete.conj()));
        Some((v, d))
    };
    // attempts run in index order until `samples` solutions are found
    let mut solved: Vec<(f64, f64)> = Vec::with_capacity(samples);
    let mut attempts = 0;
    while solved.len() < samples && attempts < MAX_ATTEMPT_FACTOR * samples {
        let batch = (samples - solved.len()).max(64);
        let found: Vec<Option<(f64, f64)>> = (attempts..attempts + batch).into_par_iter().map(attempt).collect();
        for f in found {
            if solved.len() == samples {
                break;
            }
            attempts += 1;
            solved.extend(f);
        }
    }
    let (max_volume, argmax_distance) =
        solved.iter().cloned().fold((f64::NEG_INFINITY, f64::NAN), |acc, s| if s.0 > acc.0 { s } else { acc });
    let near: Vec<f64> = solved.iter().filter(|s| vmax - s.0.abs() <= equality_threshold).map(|s| s.1).collect();
    let max_near = near.iter().cloned().fold(0.0, f64::max);
    Ok(RandomScanReport {
        attempts,
        solutions: solved.len(),
        complete_volume: vmax,
        max_volume,
        argmax_distance,
        equality_threshold,
        near_equality: near.len(),
        max_near_equality_distance: max_near,
        pass: max_volume <= vmax + 1e-9 && max_near <= 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triangulation::regular_shape;

    #[test]
    fn figure_eight_volume() {
        let tri = IdealTriangulation::figure_eight();
        let z = ShapeVector(vec![regular_shape(); 2]);
        let v = volume_of_shapes(&tri, &z).unwrap();
        assert!((v.value - 2.0 * REGULAR_TETRAHEDRON_VOLUME).abs() < 1e-12);
        assert!((volume_of_shapes(&tri, &z.conj()).unwrap().value + v.value).abs() < 1e-14);
        let flat = ShapeVector(vec![Complex64::new(-0.5, 0.0), Complex64::new(2.5, 0.0)]);
        assert_eq!(volume_of_shapes(&tri, &flat).unwrap().value, 0.0);
    }

    #[test]
    fn short_path_stays_below_maximum() {
        let tri = IdealTriangulation::figure_eight();
        let path = deformation_path(&tri, PathDirection::default(), 10).unwrap();
        assert!(path.points[0].deficit.abs() < 1e-12);
        for p in &path.points[1..] {
            assert!(p.deficit > 1e-6);
            assert!(p.edge_residual < 1e-10);
            assert!(p.holonomy.relator_residual_sl2() < 1e-8);
            let straight = p.holonomy.straight_volume().unwrap();
            assert!((straight - p.volume.value).abs() < 1e-9);
        }
        assert!(path.min_volume_drop > 0.0);
        assert!(path.near_ideal_epsilon.unwrap() > 0.0);
    }

    #[test]
    fn halving_the_step_keeps_volumes() {
        let tri = IdealTriangulation::figure_eight();
        let a = deformation_path(&tri, PathDirection::default(), 10).unwrap();
        let b = deformation_path(&tri, PathDirection::default(), 20).unwrap();
        for (i, p) in a.points.iter().enumerate() {
            assert!((p.volume.value - b.points[2 * i].volume.value).abs() <= 1e-8);
        }
    }

    #[test]
    fn random_scan_small() {
        let tri = IdealTriangulation::figure_eight();
        let r = random_solution_scan(&tri, 400, 1, 1e-13).unwrap();
        assert!(r.solutions > 300);
        assert!(r.pass, "{r:?}");
    }
}
