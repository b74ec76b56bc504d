//! Busemann barycenter of a boundary measure: the minimizer of
//! `φ_β(y) = ∫ B(y, θ) dβ(θ)`, or the dominant atom when one carries half the
//! mass.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{busemann_unchecked, busemann_unit_frame, distance, exp_map, BoundaryPoint, HPoint, TangentVector};
use crate::measure::{atom_clusters, BoundaryMeasure};

/// Mass deficit below one half still treated as a dominant atom.
pub const HALF_MASS_TOL: f64 = 1e-12;

/// Longest trial step of the line search, in hyperbolic distance.
const MAX_STEP: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Step contraction factor of the backtracking line search.
    pub contraction: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Newton steps are replaced by gradient steps below this Hessian eigenvalue.
    pub min_eigenvalue: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, contraction: 0.5, armijo: 1e-4, min_eigenvalue: 1e-8 }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.contraction > 0.0 && self.contraction < 1.0) {
            return Err(Error::InvalidParameter(format!("invalid solver configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BarycenterLocation {
    Interior(HPoint),
    BoundaryAtom(BoundaryPoint),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarycenterResult {
    pub location: BarycenterLocation,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Set when a gradient step replaced a Newton step because the Hessian
    /// was nearly singular.
    pub used_gradient_fallback: bool,
}

impl BarycenterResult {
    pub fn interior(&self) -> Option<&HPoint> {
        match &self.location {
            BarycenterLocation::Interior(p) => Some(p),
            BarycenterLocation::BoundaryAtom(_) => None,
        }
    }
}

fn check_dims(beta: &BoundaryMeasure, y: &HPoint) -> Result<()> {
    if beta.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: y.dim(), found: beta.dim() });
    }
    Ok(())
}

/// `φ_β(y)`.
pub fn phi(beta: &BoundaryMeasure, y: &HPoint) -> Result<f64> {
    check_dims(beta, y)?;
    Ok(beta.iter().map(|(w, t)| w * busemann_unchecked(y, t)).sum())
}

/// Gradient and Hessian of `φ_β` at `y` in the orthonormal frame.
pub(crate) fn frame_derivatives(beta: &BoundaryMeasure, y: &HPoint) -> (DVector<f64>, DMatrix<f64>) {
    let k = y.dim();
    let n = y.coords().norm();
    let a = (1.0 - n) * (1.0 + n);
    let mut g = DVector::zeros(k);
    let mut h = DMatrix::identity(k, k);
    for (w, t) in beta.iter() {
        let u = busemann_unit_frame(y.coords(), a, t.direction());
        g.axpy(*w, &u, 1.0);
        h.ger(-*w, &u, &u, 1.0);
    }
    (g, h)
}

/// `∫ grad B(·, θ) dβ(θ)` at `y`.
pub fn phi_gradient(beta: &BoundaryMeasure, y: &HPoint) -> Result<TangentVector> {
    check_dims(beta, y)?;
    TangentVector::from_frame(y.clone(), frame_derivatives(beta, y).0)
}

/// `∫ (g - dB ⊗ dB) dβ` at `y` in the orthonormal frame.
pub fn phi_hessian(beta: &BoundaryMeasure, y: &HPoint) -> Result<DMatrix<f64>> {
    check_dims(beta, y)?;
    Ok(frame_derivatives(beta, y).1)
}

fn initial_guess(beta: &BoundaryMeasure) -> HPoint {
    let mut c = DVector::zeros(beta.dim());
    for (w, t) in beta.iter() {
        c.axpy(*w, t.direction(), 1.0);
    }
    HPoint::new(c * 0.5).expect("centroid scaled by 1/2 lies in the ball")
}

/// Checks the excluded case and the dominant-atom clause; returns the atom
/// when the barycenter sits on the sphere.
fn boundary_case(beta: &BoundaryMeasure) -> Result<Option<BoundaryPoint>> {
    let clusters = atom_clusters(beta);
    if clusters.len() == 2
        && (clusters[0].0 - 0.5).abs() <= HALF_MASS_TOL
        && (clusters[1].0 - 0.5).abs() <= HALF_MASS_TOL
    {
        return Err(Error::TwoEqualAtoms);
    }
    match clusters.into_iter().next() {
        Some((m, p)) if m >= 0.5 - HALF_MASS_TOL => Ok(Some(p)),
        Some(_) => Ok(None),
        None => Err(Error::InvalidMeasure("empty measure".into())),
    }
}

/// Busemann barycenter with the default initial guess.
pub fn barycenter(beta: &BoundaryMeasure, cfg: &SolverConfig) -> Result<BarycenterResult> {
    if let Some(atom) = boundary_case(beta)? {
        return Ok(BarycenterResult {
            location: BarycenterLocation::BoundaryAtom(atom),
            gradient_norm: 0.0,
            iterations: 0,
            used_gradient_fallback: false,
        });
    }
    minimize(beta, cfg, initial_guess(beta))
}

/// Busemann barycenter started from `init` (used for restart checks).
pub fn barycenter_from(beta: &BoundaryMeasure, cfg: &SolverConfig, init: HPoint) -> Result<BarycenterResult> {
    check_dims(beta, &init)?;
    if let Some(atom) = boundary_case(beta)? {
        return Ok(BarycenterResult {
            location: BarycenterLocation::BoundaryAtom(atom),
            gradient_norm: 0.0,
            iterations: 0,
            used_gradient_fallback: false,
        });
    }
    minimize(beta, cfg, init)
}

/// Riemannian Newton iteration with Armijo backtracking.
fn minimize(beta: &BoundaryMeasure, cfg: &SolverConfig, init: HPoint) -> Result<BarycenterResult> {
    cfg.validate()?;
    let mut y = init;
    let mut f = phi(beta, &y)?;
    let mut fallback = false;
    for iter in 0..cfg.max_iter {
        let (g, h) = frame_derivatives(beta, &y);
        let gnorm = g.norm();
        if gnorm <= cfg.tol {
            return Ok(BarycenterResult {
                location: BarycenterLocation::Interior(y),
                gradient_norm: gnorm,
                iterations: iter,
                used_gradient_fallback: fallback,
            });
        }
        let eig = SymmetricEigen::new(h.clone());
        let min_eig = eig.eigenvalues.min();
        let step = if min_eig < cfg.min_eigenvalue {
            fallback = true;
            -&g
        } else {
            let inv = eig.eigenvalues.map(|l| 1.0 / l);
            -(&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose() * &g)
        };
        let slope = g.dot(&step);
        // cap the trial step so exp_map stays well inside the ball
        let mut alpha = (MAX_STEP / step.norm()).min(1.0);
        let mut accepted = None;
        for _ in 0..80 {
            let v = TangentVector::from_frame(y.clone(), &step * alpha)?;
            let trial = exp_map(&y, &v).and_then(|cand| Ok((phi(beta, &cand)?, cand)));
            // Rounding in φ dominates Armijo decrease once |g|² < eps |φ|.
            let slack = 64.0 * f64::EPSILON * (1.0 + f.abs());
            if let Ok((fc, cand)) = trial {
                if fc <= f + cfg.armijo * alpha * slope + slack {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            alpha *= cfg.contraction;
        }
        match accepted {
            Some((cand, fc)) => {
                y = cand;
                f = fc;
            }
            None => {
                return Err(Error::NoConvergence {
                    best: y.coords().iter().cloned().collect(),
                    gradient_norm: gnorm,
                    iterations: iter,
                })
            }
        }
    }
    let g = frame_derivatives(beta, &y).0.norm();
    if g <= cfg.tol {
        return Ok(BarycenterResult {
            location: BarycenterLocation::Interior(y),
            gradient_norm: g,
            iterations: cfg.max_iter,
            used_gradient_fallback: fallback,
        });
    }
    Err(Error::NoConvergence { best: y.coords().iter().cloned().collect(), gradient_norm: g, iterations: cfg.max_iter })
}

/// Distance between two barycenter results: hyperbolic distance for two
/// interior points, Euclidean distance in the closed ball otherwise.
pub fn result_deviation(a: &BarycenterResult, b: &BarycenterResult) -> f64 {
    let closed = |r: &BarycenterResult| match &r.location {
        BarycenterLocation::Interior(p) => p.coords().clone(),
        BarycenterLocation::BoundaryAtom(t) => t.direction().clone(),
    };
    match (&a.location, &b.location) {
        (BarycenterLocation::Interior(p), BarycenterLocation::Interior(q)) => {
            distance(p, q).unwrap_or(f64::INFINITY)
        }
        _ => (closed(a) - closed(b)).norm(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakStarReport {
    /// Deviation of each term's barycenter from the limit's barycenter.
    pub deviations: Vec<f64>,
    /// Largest deviation over the second half of the sequence.
    pub max_tail_deviation: f64,
    /// True when the deviations over the tail never increase.
    pub tail_nonincreasing: bool,
}

/// Compares barycenters along a weak-* convergent sequence with the
/// barycenter of the limit measure.
pub fn weak_star_continuity_check(
    sequence: &[BoundaryMeasure],
    limit: &BoundaryMeasure,
    cfg: &SolverConfig,
) -> Result<WeakStarReport> {
    let target = barycenter(limit, cfg)?;
    let deviations = sequence
        .iter()
        .map(|b| Ok(result_deviation(&barycenter(b, cfg)?, &target)))
        .collect::<Result<Vec<f64>>>()?;
    let tail = &deviations[deviations.len() / 2..];
    let max_tail_deviation = tail.iter().cloned().fold(0.0, f64::max);
    let tail_nonincreasing = tail.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(WeakStarReport { deviations, max_tail_deviation, tail_nonincreasing })
}
