//! The function `ψ(H) = det H / det(I - H)²` on trace-one positive definite
//! matrices, its eigenvalue form `Ψ` on the open simplex, and numerical scans
//! of its maximum and boundary behaviour.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::random_orthogonal;

/// Tolerance for symmetry and unit trace of a [`TraceOneSpd`].
pub const SPD_TOL: f64 = 1e-12;

const CHUNK: usize = 8192;

/// Symmetric positive definite matrix with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceOneSpd {
    m: DMatrix<f64>,
}

impl TraceOneSpd {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let k = m.nrows();
        if m.ncols() != k || k < 2 {
            return Err(Error::InvalidParameter(format!("expected a square matrix of size ≥ 2, got {}x{}", k, m.ncols())));
        }
        if (&m - m.transpose()).amax() > SPD_TOL {
            return Err(Error::InvalidParameter("matrix is not symmetric".into()));
        }
        if (m.trace() - 1.0).abs() > SPD_TOL {
            return Err(Error::InvalidParameter(format!("trace {} differs from 1", m.trace())));
        }
        let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
        if !(min > 0.0) {
            return Err(Error::InvalidParameter(format!("matrix is not positive definite (λ_min = {min})")));
        }
        Ok(Self { m })
    }

    /// `I/k`, the maximizer of ψ.
    pub fn isotropic(k: usize) -> Self {
        Self { m: DMatrix::identity(k, k) / k as f64 }
    }

    /// `Q diag(a) Qᵀ` for a simplex point `a` and orthogonal `Q`.
    pub fn from_spectrum(a: &SimplexPoint, q: &DMatrix<f64>) -> Self {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&a.a));
        let m = q * d * q.transpose();
        Self { m: (&m + m.transpose()) * 0.5 }
    }

    /// Dirichlet(`concentration`) eigenvalues conjugated by a Haar-random rotation.
    pub fn random<R: Rng + ?Sized>(k: usize, concentration: f64, rng: &mut R) -> Self {
        let a = SimplexPoint::random(k, concentration, rng);
        let q = random_orthogonal(k, rng);
        Self::from_spectrum(&a, &q)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.m.clone()).eigenvalues.iter().cloned().collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    /// Frobenius distance to `I/k`.
    pub fn distance_to_isotropic(&self) -> f64 {
        let k = self.dim();
        (&self.m - DMatrix::identity(k, k) / k as f64).norm()
    }
}

/// Point of the open standard simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    a: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidParameter("simplex point needs at least 2 coordinates".into()));
        }
        if a.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidParameter("simplex coordinates must be positive".into()));
        }
        let s: f64 = a.iter().sum();
        if (s - 1.0).abs() > SPD_TOL {
            return Err(Error::InvalidParameter(format!("simplex coordinates sum to {s}")));
        }
        Ok(Self { a })
    }

    pub fn barycenter(k: usize) -> Self {
        Self { a: vec![1.0 / k as f64; k] }
    }

    /// Symmetric Dirichlet sample.
    pub fn random<R: Rng + ?Sized>(k: usize, concentration: f64, rng: &mut R) -> Self {
        let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
        loop {
            let g: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
            let s: f64 = g.iter().sum();
            if s > 0.0 && g.iter().all(|x| *x > 0.0) {
                return Self { a: g.iter().map(|x| x / s).collect() };
            }
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.a
    }
}

/// `(k / (k-1)²)^k`, the maximum of ψ in dimension `k`.
pub fn psi_max(k: usize) -> f64 {
    let kf = k as f64;
    (kf / ((kf - 1.0) * (kf - 1.0))).powi(k as i32)
}

/// `det H / det(I - H)²`.
pub fn psi(h: &TraceOneSpd) -> f64 {
    let k = h.dim();
    let i_minus = DMatrix::identity(k, k) - h.matrix();
    let d = i_minus.determinant();
    h.matrix().determinant() / (d * d)
}

/// `Π a_i / (1 - a_i)²`.
pub fn psi_simplex(a: &SimplexPoint) -> f64 {
    psi_coords(&a.a)
}

fn psi_coords(a: &[f64]) -> f64 {
    a.iter().map(|&x| x / ((1.0 - x) * (1.0 - x))).product()
}

/// `|p_H(0)| / p_H(1)²` with `p_H(t) = det(tI - H)`, the coefficients of the
/// characteristic polynomial obtained by the Faddeev–LeVerrier recursion.
pub fn psi_charpoly(h: &TraceOneSpd) -> f64 {
    let c = characteristic_coefficients(h.matrix());
    let p0 = c[0];
    let p1: f64 = c.iter().sum();
    p0.abs() / (p1 * p1)
}

/// Coefficients `c_0, …, c_k` of `det(tI - A) = Σ c_i tⁱ`.
pub fn characteristic_coefficients(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = DMatrix::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    for j in 1..=n {
        m = a * &m + &id * c[n - j + 1];
        c[n - j] = -(a * &m).trace() / j as f64;
    }
    c
}

/// Chunked parallel sampling with one deterministic RNG per chunk.
fn chunked<T, F>(samples: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + 1);
            let len = CHUNK.min(samples - c * CHUNK);
            f(&mut rng, len)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalBoundReport {
    pub k: usize,
    pub samples: usize,
    pub max_value: f64,
    pub bound: f64,
    pub argmax_eigenvalues: Vec<f64>,
    pub pass: bool,
}

/// Samples random trace-one SPD matrices and records the largest ψ.
pub fn global_bound_scan(k: usize, samples: usize, seed: u64, tol: f64) -> Result<GlobalBoundReport> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("ψ is bounded only for k ≥ 3, got {k}")));
    }
    let parts = chunked(samples, seed, |rng, len| {
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for _ in 0..len {
            let h = TraceOneSpd::random(k, 1.0, rng);
            let v = psi(&h);
            if v > best.0 {
                best = (v, h.eigenvalues());
            }
        }
        best
    });
    let (max_value, argmax) = parts.into_iter().fold((f64::NEG_INFINITY, Vec::new()), |a, b| if b.0 > a.0 { b } else { a });
    let bound = psi_max(k);
    Ok(GlobalBoundReport { k, samples, max_value, bound, argmax_eigenvalues: argmax, pass: max_value <= bound + tol })
}

/// `s^{k-3} / (k-1)^{k-1}`: limit envelope of Ψ near a vertex, where `s` is
/// the sum of the `k-1` small coordinates.
pub fn vertex_envelope(k: usize, s: f64) -> f64 {
    s.powi(k as i32 - 3) / ((k - 1) as f64).powi(k as i32 - 1)
}

/// Supremum of Ψ over `{min coordinate ≤ margin}` for k = 3, attained at
/// `(margin, margin, 1 - 2 margin)`; it exceeds the limiting value 1/4 by
/// about `margin / 2`.
pub fn boundary_sup_k3(margin: f64) -> f64 {
    psi_coords(&[margin, margin, 1.0 - 2.0 * margin])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryScanReport {
    pub k: usize,
    pub margin: f64,
    pub samples: usize,
    pub max_value: f64,
    pub argmax: Vec<f64>,
    /// Limit bound: 1/4 for k = 3, `(k margin)^{k-3}/(k-1)^{k-1}` for k ≥ 4.
    pub bound: f64,
    /// Allowance for the finite margin (k = 3: sup over the margin region
    /// minus 1/4; k ≥ 4: zero, the envelope ratio is reported separately).
    pub tolerance: f64,
    /// k ≥ 4: largest `Ψ / vertex_envelope(s)` over vertex-approaching samples.
    pub max_envelope_ratio: Option<f64>,
    pub pass: bool,
}

/// Samples the margin neighbourhood of the simplex boundary: a uniformly
/// chosen coordinate is drawn uniformly in `(0, margin)`, the others split
/// the remaining mass uniformly. For k ≥ 4 a second pass samples the vertex
/// neighbourhoods `{1 - max < margin}` and compares with the vertex envelope.
pub fn boundary_bound_scan(k: usize, margin: f64, samples: usize, seed: u64) -> Result<BoundaryScanReport> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("boundary scan needs k ≥ 3, got {k}")));
    }
    if !(margin > 0.0 && margin < 1.0 / k as f64) {
        return Err(Error::InvalidParameter(format!("margin {margin} outside (0, 1/k)")));
    }
    let best = |a: (f64, Vec<f64>), b: (f64, Vec<f64>)| if b.0 > a.0 { b } else { a };
    if k == 3 {
        let parts = chunked(samples, seed, |rng, len| {
            let mut top = (f64::NEG_INFINITY, Vec::new());
            for _ in 0..len {
                let a = margin_sample(k, margin, rng);
                top = best(top, (psi_coords(&a), a));
            }
            top
        });
        let (max_value, argmax) = parts.into_iter().fold((f64::NEG_INFINITY, Vec::new()), best);
        let tolerance = boundary_sup_k3(margin) - 0.25;
        return Ok(BoundaryScanReport {
            k,
            margin,
            samples,
            max_value,
            argmax,
            bound: 0.25,
            tolerance,
            max_envelope_ratio: None,
            pass: max_value <= 0.25 + tolerance,
        });
    }
    let parts = chunked(samples, seed, |rng, len| {
        let mut top = (f64::NEG_INFINITY, Vec::new());
        let mut ratio = 0.0_f64;
        for _ in 0..len {
            let a = vertex_sample(k, margin, rng);
            let s = 1.0 - a.iter().cloned().fold(0.0, f64::max);
            let v = psi_coords(&a);
            ratio = ratio.max(v / vertex_envelope(k, s));
            top = best(top, (v, a));
        }
        (top, ratio)
    });
    let ratio = parts.iter().map(|p| p.1).fold(0.0, f64::max);
    let (max_value, argmax) = parts.into_iter().map(|p| p.0).fold((f64::NEG_INFINITY, Vec::new()), best);
    let bound = vertex_envelope(k, k as f64 * margin);
    Ok(BoundaryScanReport {
        k,
        margin,
        samples,
        max_value,
        argmax,
        bound,
        tolerance: 0.0,
        max_envelope_ratio: Some(ratio),
        pass: max_value <= bound,
    })
}

fn uniform_split<R: Rng + ?Sized>(parts: usize, total: f64, rng: &mut R) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..parts - 1).map(|_| rng.random::<f64>()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.windows(2).map(|w| (w[1] - w[0]) * total).collect()
}

fn margin_sample<R: Rng + ?Sized>(k: usize, margin: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let small = margin * rng.random::<f64>();
        let i = rng.random_range(0..k);
        let mut rest = uniform_split(k - 1, 1.0 - small, rng);
        rest.insert(i, small);
        if rest.iter().all(|x| *x > 0.0) {
            return rest;
        }
    }
}

fn vertex_sample<R: Rng + ?Sized>(k: usize, margin: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let s = margin * rng.random::<f64>();
        let mut small = uniform_split(k - 1, s, rng);
        let i = rng.random_range(0..k);
        small.insert(i, 1.0 - s);
        if small.iter().all(|x| *x > 0.0) {
            return small;
        }
    }
}

/// Values of Ψ along `(α, b_n, 1 - α - b_n)` with `b_n = margin · 2^{-n}`,
/// a sequence approaching the non-vertex boundary point `(α, 0, 1 - α)`.
pub fn edge_sequence(alpha: f64, margin: f64, terms: usize) -> Vec<f64> {
    (0..terms)
        .map(|n| {
            let b = margin * 0.5_f64.powi(n as i32);
            psi_coords(&[alpha, b, 1.0 - alpha - b])
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConverseReport {
    pub k: usize,
    pub eps: f64,
    pub trials: usize,
    pub accepted: usize,
    /// Largest `|H - I/k|_F` among sampled matrices with `ψ ≥ (1-ε) max`.
    pub delta_max: f64,
    /// Certified upper bound from the eigenvalue grid (k = 3 only).
    pub grid_bound: Option<f64>,
}

/// Rejection sampling of the super-level set `{ψ ≥ (1-ε) ψ_max}`: local
/// perturbations of `I/k` with Cauchy-distributed size over several scales,
/// plus a global Dirichlet scatter pass. For k = 3 the sampled radius is
/// backed by [`grid_level_set_radius`].
pub fn quantitative_converse(k: usize, eps: f64, trials: usize, seed: u64, grid_step: Option<f64>) -> Result<ConverseReport> {
    if k < 3 || !(0.0..=0.1).contains(&eps) || trials == 0 {
        return Err(Error::InvalidParameter(format!("invalid converse parameters k={k}, ε={eps}, trials={trials}")));
    }
    let level = psi_max(k) * (1.0 - eps);
    let guess = (eps / psi_hessian_scale(k)).sqrt().max(1e-9);
    let cauchy = Cauchy::new(0.0, 1.0).expect("valid Cauchy");
    let parts = chunked(trials, seed, |rng, len| {
        let mut acc = 0usize;
        let mut delta = 0.0_f64;
        for i in 0..len {
            let h = if i % 4 == 3 {
                Some(TraceOneSpd::random(k, 1.0, rng))
            } else {
                let scale = guess * 10f64.powi(rng.random_range(-8..=2));
                let t: f64 = cauchy.sample(rng);
                perturb_isotropic(k, scale * t.abs(), rng)
            };
            if let Some(h) = h {
                if psi(&h) >= level {
                    acc += 1;
                    delta = delta.max(h.distance_to_isotropic());
                }
            }
        }
        (acc, delta)
    });
    let accepted = 1 + parts.iter().map(|p| p.0).sum::<usize>();
    let delta_max = parts.iter().map(|p| p.1).fold(0.0, f64::max);
    let grid_bound = match (k, grid_step) {
        (3, Some(step)) => Some(grid_level_set_radius(eps, step)?.certified_radius),
        _ => None,
    };
    Ok(ConverseReport { k, eps, trials, accepted, delta_max, grid_bound })
}

/// Second-order coefficient `c` in `ψ(I/k + E) ≈ ψ_max (1 - c |E|²)` for
/// traceless `E`, used only to centre the perturbation scales.
fn psi_hessian_scale(k: usize) -> f64 {
    let kf = k as f64;
    // log Ψ = Σ log a - 2 log(1 - a); second derivative at 1/k per coordinate
    0.5 * (kf * kf + 2.0 * kf * kf / ((kf - 1.0) * (kf - 1.0)))
}

fn perturb_isotropic<R: Rng + ?Sized>(k: usize, size: f64, rng: &mut R) -> Option<TraceOneSpd> {
    let mut e = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    e = (&e + e.transpose()) * 0.5;
    let tr = e.trace() / k as f64;
    for i in 0..k {
        e[(i, i)] -= tr;
    }
    let n = e.norm();
    if n == 0.0 {
        return None;
    }
    let m = DMatrix::identity(k, k) / k as f64 + e * (size / n);
    let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
    if min > 0.0 {
        Some(TraceOneSpd { m })
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCertificate {
    pub eps: f64,
    pub step: f64,
    /// Grid points (a, b) with Ψ at or above the relaxed level.
    pub points_in_level_set: usize,
    /// Largest distance to I/3 over grid points at the exact level.
    pub grid_radius: f64,
    /// Upper bound on the distance to I/3 over the whole level set: the
    /// largest distance over grid points at the level lowered by the
    /// gradient bound times the mesh radius, plus the mesh radius.
    pub certified_radius: f64,
}

/// Eigenvalue-simplex grid oracle for `{Ψ ≥ (1-ε) 27/64}` (k = 3).
///
/// Every point `p` of the simplex lies within the mesh radius
/// `r = step·sqrt(3/2)` (Frobenius norm of the eigenvalue difference) of a
/// grid point `q`, and `Ψ(q) ≥ Ψ(p) - G r` where `G` bounds `|∇Ψ|` on the
/// relevant region. So every point of the level set has a grid neighbour in
/// the relaxed set, whose radius plus `r` bounds the level set's radius.
/// `G` is first taken over a coarse super-level region, then repeatedly over
/// the ball of the current bound only, which shrinks the relaxation.
pub fn grid_level_set_radius(eps: f64, step: f64) -> Result<GridCertificate> {
    if !(step > 0.0 && step < 0.1) || !(0.0..=0.1).contains(&eps) {
        return Err(Error::InvalidParameter(format!("invalid grid parameters ε={eps}, step={step}")));
    }
    let level = psi_max(3) * (1.0 - eps);
    let r = step * 1.5_f64.sqrt();
    let n = (1.0 / step).round() as usize;
    let third = 1.0 / 3.0;
    let dist = |a: f64, b: f64| {
        let c = 1.0 - a - b;
        ((a - third).powi(2) + (b - third).powi(2) + (c - third).powi(2)).sqrt()
    };
    let value = |a: f64, b: f64| {
        let c = 1.0 - a - b;
        if a <= 0.0 || b <= 0.0 || c <= 0.0 {
            0.0
        } else {
            psi_coords(&[a, b, c])
        }
    };
    // |∇Ψ| (Frobenius norm on the trace-zero plane) by central differences,
    // maximized over grid points passing `keep`, with a safety factor of two
    let grad_bound = |keep: &dyn Fn(f64, f64) -> bool| {
        let h = 1e-6;
        let mut g_max = 0.0_f64;
        for i in 1..n {
            for j in 1..n - i {
                let (a, b) = (i as f64 * step, j as f64 * step);
                if !keep(a, b) {
                    continue;
                }
                let ga = (value(a + h, b) - value(a - h, b)) / (2.0 * h);
                let gb = (value(a, b + h) - value(a, b - h)) / (2.0 * h);
                g_max = g_max.max(((ga * ga + gb * gb - ga * gb) * 2.0 / 3.0).sqrt());
            }
        }
        2.0 * g_max
    };
    let scan = |relaxed: f64| {
        let mut grid_radius = 0.0_f64;
        let mut relaxed_radius = 0.0_f64;
        let mut count = 0;
        for i in 1..n {
            for j in 1..n - i {
                let (a, b) = (i as f64 * step, j as f64 * step);
                let v = value(a, b);
                if v >= relaxed {
                    count += 1;
                    relaxed_radius = relaxed_radius.max(dist(a, b));
                    if v >= level {
                        grid_radius = grid_radius.max(dist(a, b));
                    }
                }
            }
        }
        (count, grid_radius, relaxed_radius)
    };
    // First pass: gradient bound over a coarse super-level region.
    let coarse_level = level - 0.05;
    let g = grad_bound(&|a, b| value(a, b) >= coarse_level);
    let relaxed = level - g * r;
    if relaxed <= coarse_level {
        return Err(Error::InvalidParameter(format!("grid step {step} too coarse for ε = {eps}")));
    }
    let (mut count, mut grid_radius, relaxed_radius) = scan(relaxed);
    let mut certified = relaxed_radius + r;
    // Later passes: the level set lies in the ball of the current certified
    // radius, so only gradients within a mesh radius of that ball matter;
    // grid points within two mesh radii cover it.
    for _ in 0..20 {
        let reach = certified + 2.0 * r;
        let g = grad_bound(&|a, b| dist(a, b) <= reach);
        let (c, gr, rr) = scan(level - g * r);
        let next = rr + r;
        if next >= certified {
            break;
        }
        (count, grid_radius, certified) = (c, gr, next);
    }
    Ok(GridCertificate { eps, step, points_in_level_set: count, grid_radius, certified_radius: certified })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(41)
    }

    /// Product of eigenvalue terms, independent of the determinant path.
    fn psi_eigen_oracle(h: &TraceOneSpd) -> f64 {
        h.eigenvalues().iter().map(|l| l / ((1.0 - l) * (1.0 - l))).product()
    }

    #[test]
    fn psi_known_values() {
        assert!((psi(&TraceOneSpd::isotropic(3)) - 27.0 / 64.0).abs() < 1e-14);
        let h = TraceOneSpd::new(DMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, 0.25, 0.25]))).unwrap();
        assert!((psi(&h) - 32.0 / 81.0).abs() < 1e-14);
        assert!((psi_eigen_oracle(&h) - 32.0 / 81.0).abs() < 1e-14);
        assert!((psi_simplex(&SimplexPoint::barycenter(3)) - 27.0 / 64.0).abs() < 1e-15);
        assert!((psi_simplex(&SimplexPoint::barycenter(4)) - 256.0 / 6561.0).abs() < 1e-15);
        assert!((psi_max(4) - 256.0 / 6561.0).abs() < 1e-16);
    }

    #[test]
    fn psi_invariances_and_identities() {
        let mut r = rng();
        for k in 3..=5 {
            for _ in 0..50 {
                let h = TraceOneSpd::random(k, 1.0, &mut r);
                let q = random_orthogonal(k, &mut r);
                let m = &q * h.matrix() * q.transpose();
                let hq = TraceOneSpd::new((&m + m.transpose()) * 0.5).unwrap();
                let v = psi(&h);
                assert!((psi(&hq) - v).abs() <= 1e-12 * v.max(1.0));
                assert!((psi_charpoly(&h) - v).abs() <= 1e-12 * v.max(1.0));
                let eig = SimplexPoint { a: h.eigenvalues() };
                assert!((psi_simplex(&eig) - v).abs() <= 1e-12 * v.max(1.0));
                assert!(v <= psi_max(k) + 1e-12);
            }
        }
    }

    #[test]
    fn simplex_permutation_invariance() {
        let mut r = rng();
        for _ in 0..100 {
            let a = SimplexPoint::random(4, 1.0, &mut r);
            let mut b = a.coords().to_vec();
            b.reverse();
            b.swap(0, 2);
            let v = psi_simplex(&a);
            assert!((psi_coords(&b) - v).abs() <= 1e-14 * v.max(1.0));
        }
    }

    #[test]
    fn k2_is_unbounded() {
        let vals: Vec<f64> = [1e-1, 1e-3, 1e-6].iter().map(|&a| psi_coords(&[a, 1.0 - a])).collect();
        for (v, a) in vals.iter().zip([1e-1, 1e-3, 1e-6]) {
            assert!((v - 1.0 / (a * (1.0 - a))).abs() < 1e-9 * v);
        }
        assert!(vals[2] > 1e5);
    }

    #[test]
    fn validation() {
        assert!(TraceOneSpd::new(DMatrix::identity(3, 3)).is_err());
        assert!(TraceOneSpd::new(DMatrix::from_diagonal(&DVector::from_column_slice(&[1.2, -0.2]))).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn boundary_sup_exceeds_quarter_by_half_margin() {
        let m = 1e-3;
        let s = boundary_sup_k3(m);
        assert!((s - 0.25 - m / 2.0).abs() < 2e-6);
        // no margin point on a fine grid beats it
        let n = 2000;
        for i in 0..=n {
            let a = m * i as f64 / n as f64;
            if a == 0.0 {
                continue;
            }
            for j in 1..1000 {
                let b = j as f64 / 1000.0 * (1.0 - a);
                assert!(psi_coords(&[a, b, 1.0 - a - b]) <= s + 1e-15);
            }
        }
    }

    #[test]
    fn edge_sequences_vanish() {
        for alpha in [0.2, 0.5, 0.8] {
            let seq = edge_sequence(alpha, 1e-4, 21);
            assert!(seq.windows(2).all(|w| w[1] < w[0]));
            assert!(*seq.last().unwrap() < 1e-4);
        }
    }

    #[test]
    fn scans_are_deterministic() {
        let a = boundary_bound_scan(4, 1e-2, 20_000, 5).unwrap();
        let b = boundary_bound_scan(4, 1e-2, 20_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.pass);
    }

    #[test]
    fn grid_certificate_brackets_sampling() {
        let cert = grid_level_set_radius(1e-2, 1e-3).unwrap();
        assert!(cert.grid_radius <= cert.certified_radius);
        let rep = quantitative_converse(3, 1e-2, 20_000, 9, None).unwrap();
        assert!(rep.delta_max <= cert.certified_radius);
        assert!(rep.delta_max > 0.5 * cert.grid_radius);
    }
}
