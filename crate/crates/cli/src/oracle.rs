//! Reference computations that do not go through the library's solvers.

use nalgebra::DVector;
use rayon::prelude::*;

/// `Л(π/3) = ½ Σ sin(2nπ/3)/n²`, summed in closed periodic form
/// `(√3/4) Σ_m [(3m+1)^{-2} - (3m+2)^{-2}]` with an Euler–Maclaurin tail.
pub fn lobachevsky_pi_over_3() -> f64 {
    let f = |x: f64| (3.0 * x + 1.0).powi(-2) - (3.0 * x + 2.0).powi(-2);
    let df = |x: f64| -6.0 * (3.0 * x + 1.0).powi(-3) + 6.0 * (3.0 * x + 2.0).powi(-3);
    let m = 4000usize;
    let head: f64 = (0..m).map(|k| f(k as f64)).sum();
    let mf = m as f64;
    let integral = (1.0 / (3.0 * mf + 1.0) - 1.0 / (3.0 * mf + 2.0)) / 3.0;
    let tail = integral + 0.5 * f(mf) - df(mf) / 12.0;
    3f64.sqrt() / 4.0 * (head + tail)
}

/// Two regular ideal tetrahedra: `6 Л(π/3)`.
pub fn figure_eight_volume() -> f64 {
    6.0 * lobachevsky_pi_over_3()
}

/// `Σ w ln(|y - θ|² / (1 - |y|²))` at the ball point `y` with normal
/// coordinates `v` at the origin (`y = tanh(|v|/2) v/|v|`, weights summing to one).
fn busemann_sum(atoms: &[(f64, DVector<f64>)], v: &[f64]) -> f64 {
    let r2: f64 = v.iter().map(|c| c * c).sum();
    let r = r2.sqrt();
    let t = (0.5 * r).tanh();
    let s = if r > 0.0 { t / r } else { 0.5 };
    let y2 = t * t;
    let mut acc = -(1.0 - y2).ln();
    for (w, theta) in atoms {
        let dot: f64 = v.iter().zip(theta.iter()).map(|(a, b)| a * b).sum();
        acc += w * (1.0 + y2 - 2.0 * s * dot).ln();
    }
    acc
}

fn ball_point(v: &[f64]) -> Vec<f64> {
    let r: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if r == 0.0 {
        return v.to_vec();
    }
    let s = (r / 2.0).tanh() / r;
    v.iter().map(|c| c * s).collect()
}

/// Minimum of the Busemann sum over the lattice `center + h Z^k`, restricted
/// to `|v - center|_∞ ≤ half` and `|v| ≤ radius`.
fn lattice_search(atoms: &[(f64, DVector<f64>)], center: &[f64], half: f64, h: f64, radius: f64) -> (f64, Vec<f64>) {
    let k = center.len();
    let n = (half / h).round() as i64;
    let side = (2 * n + 1) as usize;
    (0..side)
        .into_par_iter()
        .map(|i0| {
            let mut best = (f64::INFINITY, Vec::new());
            let mut idx = vec![0i64; k];
            idx[0] = i0 as i64 - n;
            let inner = side.pow(k as u32 - 1);
            let mut v = vec![0.0; k];
            for flat in 0..inner {
                let mut rest = flat;
                for slot in idx.iter_mut().skip(1) {
                    *slot = (rest % side) as i64 - n;
                    rest /= side;
                }
                for j in 0..k {
                    v[j] = center[j] + idx[j] as f64 * h;
                }
                if v.iter().map(|c| c * c).sum::<f64>() > radius * radius {
                    continue;
                }
                let val = busemann_sum(atoms, &v);
                if val < best.0 {
                    best = (val, v.clone());
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::INFINITY, Vec::new()), |a, b| if b.0 < a.0 { b } else { a })
}

/// Brute-force minimizer of `Σ w B(·, θ)` over the hyperbolic ball of the
/// given radius about the origin, in normal coordinates. The first pass uses
/// spacing `coarse` over the whole ball; each later pass searches a box of
/// three old spacings around the incumbent with a tenth of the spacing, until
/// the spacing drops below `fine`. Returns the minimizer in the ball model.
pub fn grid_barycenter(atoms: &[(f64, DVector<f64>)], radius: f64, coarse: f64, fine: f64) -> DVector<f64> {
    let k = atoms[0].1.len();
    let (_, mut best) = lattice_search(atoms, &vec![0.0; k], radius, coarse, radius);
    let mut h = coarse;
    while h >= fine {
        let (_, b) = lattice_search(atoms, &best, 3.0 * h, h / 10.0, radius);
        best = b;
        h /= 10.0;
    }
    DVector::from_vec(ball_point(&best))
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &t in &idx[i..=j] {
            r[t] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}
