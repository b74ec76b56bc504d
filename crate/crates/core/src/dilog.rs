//! Bloch–Wigner dilogarithm `D(z) = Im Li₂(z) + arg(1 - z) log|z|`, the volume
//! of the ideal tetrahedron with cross-ratio `z`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

const SERIES_TERMS: usize = 40;

/// `B_n / (n+1)!` for `n = 0..SERIES_TERMS`, from `B_{2j} = (-1)^{j+1} 2 (2j)! ζ(2j) / (2π)^{2j}`.
fn coefficients() -> &'static [f64; SERIES_TERMS] {
    static C: OnceLock<[f64; SERIES_TERMS]> = OnceLock::new();
    C.get_or_init(|| {
        let mut c = [0.0; SERIES_TERMS];
        c[0] = 1.0;
        c[1] = -0.25;
        let tau2 = (2.0 * PI) * (2.0 * PI);
        let mut pow = 1.0;
        for n in (2..SERIES_TERMS).step_by(2) {
            pow *= tau2;
            let j = n / 2;
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            c[n] = sign * 2.0 * zeta(n as f64) / ((n + 1) as f64 * pow);
        }
        c
    })
}

/// Riemann zeta for `s ≥ 2` by Euler–Maclaurin with a short head sum.
fn zeta(s: f64) -> f64 {
    const N: usize = 40;
    let n = N as f64;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0
}

/// Volume value with an estimate of the series truncation error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dilog {
    pub value: f64,
    pub error_estimate: f64,
}

/// `D(z)` with a truncation error estimate. `z ∈ {0, 1}` is rejected.
pub fn bloch_wigner_with_error(z: Complex64) -> Result<Dilog> {
    if !z.is_finite() || z.norm() == 0.0 || (z - 1.0).norm() == 0.0 {
        return Err(Error::PoleInput { index: 0, value: format!("{z}") });
    }
    // D(z) = D(1 - 1/z) = D(1/(1 - z)) = -D(1/z) = -D(1 - z) = -D(z/(z - 1))
    let one = Complex64::new(1.0, 0.0);
    let images = [
        (z, 1.0),
        (one - one / z, 1.0),
        (one / (one - z), 1.0),
        (one / z, -1.0),
        (one - z, -1.0),
        (z / (z - one), -1.0),
    ];
    let (w, sign) = images
        .iter()
        .filter(|(w, _)| w.norm() <= 1.0 && w.re <= 0.5)
        .min_by(|a, b| a.0.norm().total_cmp(&b.0.norm()))
        .copied()
        .unwrap_or_else(|| {
            *images.iter().min_by(|a, b| (one - a.0).ln().norm().total_cmp(&(one - b.0).ln().norm())).unwrap()
        });
    let u = -(one - w).ln();
    let c = coefficients();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut p = u;
    let mut last = 0.0;
    for (n, cn) in c.iter().enumerate() {
        if *cn != 0.0 {
            let term = p * *cn;
            sum += term;
            last = term.norm();
        }
        if n + 1 < SERIES_TERMS {
            p *= u;
        }
    }
    let value = sum.im + (one - w).arg() * w.norm().ln();
    Ok(Dilog { value: sign * value, error_estimate: last + 4.0 * f64::EPSILON * sum.norm().max(1.0) })
}

pub fn bloch_wigner(z: Complex64) -> Result<f64> {
    bloch_wigner_with_error(z).map(|d| d.value)
}

/// Cross-ratio `[a, b, c, d] = (d - b)(c - a) / ((c - b)(d - a))` in homogeneous
/// coordinates; with `a = ∞`, `b = 0`, `c = 1` it returns `d`.
pub fn cross_ratio(v: &[crate::spin::Spinor; 4]) -> Complex64 {
    let det = |p: &crate::spin::Spinor, q: &crate::spin::Spinor| p[0] * q[1] - p[1] * q[0];
    det(&v[3], &v[1]) * det(&v[2], &v[0]) / (det(&v[2], &v[1]) * det(&v[3], &v[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_z(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
    }

    /// `Σ sin(2nπ/3)/n² = (√3/2) Σ_m [(3m+1)^{-2} - (3m+2)^{-2}]`, head sum plus
    /// an Euler–Maclaurin tail.
    fn lobachevsky_pi_over_3() -> f64 {
        let f = |x: f64| (3.0 * x + 1.0).powi(-2) - (3.0 * x + 2.0).powi(-2);
        let df = |x: f64| -6.0 * (3.0 * x + 1.0).powi(-3) + 6.0 * (3.0 * x + 2.0).powi(-3);
        let m = 2000usize;
        let head: f64 = (0..m).map(|k| f(k as f64)).sum();
        let mf = m as f64;
        let integral = (1.0 / (3.0 * mf + 1.0) - 1.0 / (3.0 * mf + 2.0)) / 3.0;
        let tail = integral + 0.5 * f(mf) - df(mf) / 12.0;
        0.5 * 3f64.sqrt() / 2.0 * (head + tail)
    }

    #[test]
    fn regular_tetrahedron_volume() {
        let z = Complex64::from_polar(1.0, PI / 3.0);
        let oracle = 3.0 * lobachevsky_pi_over_3();
        assert!((oracle - 1.0149416064096536).abs() < 1e-12);
        let d = bloch_wigner_with_error(z).unwrap();
        assert!((d.value - oracle).abs() < 1e-12);
        assert!(d.error_estimate < 1e-13);
    }

    #[test]
    fn real_axis_is_flat() {
        for x in [-5.0, -0.3, 0.4, 0.99, 1.5, 40.0] {
            assert!(bloch_wigner(Complex64::new(x, 0.0)).unwrap().abs() < 1e-14);
        }
        assert!(bloch_wigner(Complex64::new(1.0, 0.0)).is_err());
        assert!(bloch_wigner(Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn symmetries_and_five_term_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let one = Complex64::new(1.0, 0.0);
        for _ in 0..200 {
            let z = rand_z(&mut rng);
            let d = bloch_wigner(z).unwrap();
            assert!((bloch_wigner(one / z).unwrap() + d).abs() < 1e-10);
            assert!((bloch_wigner(one - z).unwrap() + d).abs() < 1e-10);
            assert!((bloch_wigner(z.conj()).unwrap() + d).abs() < 1e-10);
            let x = z;
            let y = rand_z(&mut rng);
            let xy = one - x * y;
            let five = bloch_wigner(x).unwrap()
                + bloch_wigner(y).unwrap()
                + bloch_wigner((one - x) / xy).unwrap()
                + bloch_wigner(xy).unwrap()
                + bloch_wigner((one - y) / xy).unwrap();
            assert!(five.abs() < 1e-10, "{five}");
        }
    }

    #[test]
    fn matches_integral_on_unit_circle() {
        // D(e^{iθ}) = Cl₂(θ) = -∫₀^θ log|2 sin(t/2)| dt; the integrand's log
        // singularity is split off as -∫ log t, integrated exactly.
        for theta in [0.4, 1.3, 2.2, 2.9] {
            let n = 20000;
            let h = theta / n as f64;
            let g = |t: f64| -((2.0 * (t / 2.0).sin()) / t).ln();
            // g(0) = 0
            let mut s = g(theta);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
            }
            let smooth = s * h / 3.0;
            let singular = -(theta * theta.ln() - theta);
            let cl2 = smooth + singular;
            let d = bloch_wigner(Complex64::from_polar(1.0, theta)).unwrap();
            assert!((d - cl2).abs() < 1e-10, "θ={theta}: {d} vs {cl2}");
        }
    }
}
