//! SL(2,C) and the identification of `∂H³` with the Riemann sphere.
//!
//! A point `(t, x, y, z)` of Minkowski space corresponds to the Hermitian
//! matrix `[[t+z, x+iy], [x-iy, t-z]]`, and `A ∈ SL(2,C)` acts by `X ↦ A X A*`.
//! On the sphere `ζ ∈ C ∪ {∞}` is matched with
//! `θ = (2 Re ζ, 2 Im ζ, |ζ|² - 1) / (|ζ|² + 1)`, so `∞` is the north pole.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hyperbolic::{BoundaryPoint, Isometry};

pub type Sl2 = Matrix2<Complex64>;
/// Homogeneous coordinates of a point of `C ∪ {∞}`; `∞ = (1, 0)`.
pub type Spinor = Vector2<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn spinor(z: Option<Complex64>) -> Spinor {
    match z {
        Some(z) => Spinor::new(z, c(1.0, 0.0)),
        None => Spinor::new(c(1.0, 0.0), c(0.0, 0.0)),
    }
}

/// Affine value of a spinor; `None` for the point at infinity.
pub fn spinor_value(s: &Spinor) -> Option<Complex64> {
    if s[1].norm() <= 1e-300 * s[0].norm().max(1e-300) || s[1] == c(0.0, 0.0) {
        None
    } else {
        Some(s[0] / s[1])
    }
}

fn det2(a: &Spinor, b: &Spinor) -> Complex64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Möbius action `ζ ↦ (aζ + b) / (cζ + d)` on the Riemann sphere.
pub fn mobius(a: &Sl2, z: Option<Complex64>) -> Option<Complex64> {
    spinor_value(&(a * spinor(z)))
}

/// Rescales a nonsingular matrix to determinant one.
pub fn normalize_det(a: &Sl2) -> Result<Sl2> {
    let d = a.determinant();
    if d.norm() == 0.0 || !d.is_finite() {
        return Err(Error::DevelopingFailure("singular Möbius matrix".into()));
    }
    Ok(a / d.sqrt())
}

/// The Möbius map sending `(0, ∞, 1)` to the given three points.
fn frame_from(p: &Spinor, q: &Spinor, r: &Spinor) -> Result<Sl2> {
    let d = det2(q, p);
    if d.norm() == 0.0 {
        return Err(Error::DevelopingFailure("coincident points".into()));
    }
    let alpha = det2(r, p) / d;
    let beta = det2(q, r) / d;
    let qa = q * alpha;
    let pb = p * beta;
    normalize_det(&Sl2::new(qa[0], pb[0], qa[1], pb[1]))
}

/// Unique `A ∈ SL(2,C)` (up to sign) with `A·src[i] = dst[i]`.
pub fn mobius_from_three_points(src: &[Spinor; 3], dst: &[Spinor; 3]) -> Result<Sl2> {
    let s = frame_from(&src[0], &src[1], &src[2])?;
    let t = frame_from(&dst[0], &dst[1], &dst[2])?;
    let s_inv = s.try_inverse().ok_or_else(|| Error::DevelopingFailure("singular frame".into()))?;
    normalize_det(&(t * s_inv))
}

pub fn boundary_from_complex(z: Option<Complex64>) -> BoundaryPoint {
    let dir = match z {
        None => DVector::from_column_slice(&[0.0, 0.0, 1.0]),
        Some(z) => {
            let n2 = z.norm_sqr();
            DVector::from_column_slice(&[2.0 * z.re, 2.0 * z.im, n2 - 1.0]) / (n2 + 1.0)
        }
    };
    BoundaryPoint::normalized(dir).expect("unit vector")
}

/// Stereographic coordinate of a point of `∂H³`; `None` at the north pole.
pub fn boundary_to_complex(theta: &BoundaryPoint) -> Option<Complex64> {
    let d = theta.direction();
    let (x, y, z) = (d[0], d[1], d[2]);
    if z >= 0.0 {
        let denom = 1.0 - z;
        if denom <= 0.0 {
            return None;
        }
        // (x + iy)/(1 - z) = (1 + z)/(x - iy), the second form is stable near z = 1
        let w = c(x, -y);
        if w.norm() == 0.0 {
            return None;
        }
        Some(c(1.0 + z, 0.0) / w)
    } else {
        Some(c(x, y) / (1.0 - z))
    }
}

fn hermitian_basis() -> [Matrix2<Complex64>; 4] {
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    [
        Matrix2::new(one, zero, zero, one),
        Matrix2::new(zero, one, one, zero),
        Matrix2::new(zero, I, -I, zero),
        Matrix2::new(one, zero, zero, -one),
    ]
}

fn minkowski_of(h: &Matrix2<Complex64>) -> [f64; 4] {
    [
        0.5 * (h[(0, 0)] + h[(1, 1)]).re,
        h[(0, 1)].re,
        h[(0, 1)].im,
        0.5 * (h[(0, 0)] - h[(1, 1)]).re,
    ]
}

/// The orientation-preserving isometry of H³ induced by `A`.
pub fn sl2_to_isometry(a: &Sl2) -> Isometry {
    let basis = hermitian_basis();
    let adj = a.adjoint();
    let mut m = DMatrix::zeros(4, 4);
    for (j, e) in basis.iter().enumerate() {
        let y = a * e * adj;
        let col = minkowski_of(&y);
        for i in 0..4 {
            m[(i, j)] = col[i];
        }
    }
    Isometry::with_orientation(m, 1)
}

fn spinor_of_null(v: &DVector<f64>) -> Spinor {
    let h00 = v[0] + v[3];
    let h11 = v[0] - v[3];
    let h01 = c(v[1], v[2]);
    if h00 >= h11 {
        let s = h00.sqrt();
        Spinor::new(c(h00 / s, 0.0), h01.conj() / s)
    } else {
        let s = h11.sqrt();
        Spinor::new(h01 / s, c(h11 / s, 0.0))
    }
}

/// Lift of an orientation-preserving isometry of H³ to SL(2,C), determined
/// up to sign by the images of `0`, `1`, `∞`.
pub fn isometry_to_sl2(g: &Isometry) -> Option<Sl2> {
    if g.dim() != 3 || g.orientation() < 0 {
        return None;
    }
    let pts = [Some(c(0.0, 0.0)), None, Some(c(1.0, 0.0))];
    let mut images = [Spinor::zeros(); 3];
    for (i, p) in pts.iter().enumerate() {
        let v = g.lorentz() * boundary_from_complex(*p).to_null();
        images[i] = spinor_of_null(&v);
    }
    let src = [spinor(pts[0]), spinor(pts[1]), spinor(pts[2])];
    mobius_from_three_points(&src, &images).ok()
}

/// `2 |Re arccosh(tr/2)|`, evaluated so that parabolic elements give lengths at
/// rounding level.
pub fn translation_length_sl2(a: &Sl2) -> f64 {
    let tr = a[(0, 0)] + a[(1, 1)];
    let p = ((tr + 2.0) / 4.0).sqrt();
    let m = ((tr - 2.0) / 4.0).sqrt();
    let acosh = (p + m).ln() * 2.0;
    (2.0 * acosh.re).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{translation_length, Isometry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_sl2(rng: &mut ChaCha8Rng) -> Sl2 {
        use rand::Rng;
        let mut r = || c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
        normalize_det(&Sl2::new(r(), r(), r(), r())).unwrap()
    }

    #[test]
    fn stereographic_round_trip() {
        for z in [c(0.0, 0.0), c(1.0, 0.0), c(0.3, -2.0), c(1e-9, 1e-9), c(4e6, 1.0)] {
            let th = boundary_from_complex(Some(z));
            let back = boundary_to_complex(&th).unwrap();
            assert!((back - z).norm() < 1e-9 * (1.0 + z.norm()), "{z} -> {back}");
        }
        assert!(boundary_to_complex(&boundary_from_complex(None)).is_none());
    }

    #[test]
    fn lorentz_image_is_a_lorentz_matrix_and_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_sl2(&mut rng);
            let b = random_sl2(&mut rng);
            let ga = sl2_to_isometry(&a);
            assert!(ga.lorentz_defect() < 1e-10);
            assert!(ga.lorentz()[(0, 0)] > 0.0);
            assert_eq!(ga.orientation(), 1);
            let gab = sl2_to_isometry(&(a * b));
            let prod = ga.compose(&sl2_to_isometry(&b));
            assert!((gab.lorentz() - prod.lorentz()).amax() < 1e-8 * gab.lorentz().amax());
        }
    }

    #[test]
    fn boundary_action_matches_mobius() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let a = random_sl2(&mut rng);
            let g = sl2_to_isometry(&a);
            let z = c(0.4, -1.3);
            let lhs = g.act_boundary(&boundary_from_complex(Some(z))).unwrap();
            let rhs = boundary_from_complex(mobius(&a, Some(z)));
            assert!(lhs.angle_to(&rhs) < 1e-10);
        }
    }

    #[test]
    fn lift_recovers_matrix_up_to_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_sl2(&mut rng);
            let b = isometry_to_sl2(&sl2_to_isometry(&a)).unwrap();
            let err = (a - b).norm().min((a + b).norm());
            assert!(err < 1e-9 * a.norm(), "{err}");
        }
        let mut r = ChaCha8Rng::seed_from_u64(6);
        let g = Isometry::random(3, 2.0, &mut r);
        let back = sl2_to_isometry(&isometry_to_sl2(&g).unwrap());
        assert!((back.lorentz() - g.lorentz()).amax() < 1e-9 * g.lorentz().amax());
    }

    #[test]
    fn three_point_map() {
        let src = [spinor(Some(c(0.0, 0.0))), spinor(None), spinor(Some(c(1.0, 0.0)))];
        let dst = [spinor(Some(c(2.0, 1.0))), spinor(Some(c(-1.0, 0.5))), spinor(None)];
        let a = mobius_from_three_points(&src, &dst).unwrap();
        assert!((a.determinant() - c(1.0, 0.0)).norm() < 1e-12);
        assert!((mobius(&a, Some(c(0.0, 0.0))).unwrap() - c(2.0, 1.0)).norm() < 1e-12);
        assert!((mobius(&a, None).unwrap() - c(-1.0, 0.5)).norm() < 1e-12);
        assert!(mobius(&a, Some(c(1.0, 0.0))).is_none());
    }

    #[test]
    fn parabolic_translation_length_is_tiny() {
        let p = Sl2::new(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let h = random_sl2(&mut rng);
            let conj = h * p * h.try_inverse().unwrap();
            let g = sl2_to_isometry(&conj);
            assert!(translation_length(&g) < 1e-6, "{}", translation_length(&g));
        }
        let hyp = Sl2::new(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0));
        assert!((translation_length_sl2(&hyp) - 2.0 * 2.0_f64.ln()).abs() < 1e-14);
    }
}
