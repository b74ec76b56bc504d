//! Hyperbolic space H^k: ball-model points and tangent vectors, Lorentz-model
//! isometries, distances, geodesics and the Busemann calculus normalized at the
//! origin `O` of the ball.
//!
//! Points and Busemann functions live in the Poincaré ball, where they have
//! closed forms. Isometries are `(k+1)×(k+1)` matrices preserving the form
//! `diag(-1, 1, …, 1)` and the upper sheet; they act on the ball through the
//! hyperboloid. Tangent vectors carry chart components; the orthonormal frame
//! used throughout is the chart basis rescaled by the conformal factor
//! `λ(x) = 2 / (1 - |x|²)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spin;

/// Threshold on the translation length separating loxodromic isometries from
/// elliptic and parabolic ones.
pub const CLASSIFY_TOL: f64 = 1e-8;

/// Tolerance for the Lorentz-form check performed by [`Isometry::new`],
/// relative to the squared Frobenius norm of the matrix.
pub const LORENTZ_TOL: f64 = 1e-10;

/// Tolerance on `| |θ| - 1 |` accepted by [`BoundaryPoint::new`].
pub const UNIT_TOL: f64 = 1e-12;

fn one_minus_sq(norm: f64) -> f64 {
    (1.0 - norm) * (1.0 + norm)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A point of H^k in the open unit ball.
#[derive(Clone, Debug, PartialEq)]
pub struct HPoint {
    coords: DVector<f64>,
}

impl HPoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "hyperbolic dimension must be at least 2, got {}",
                coords.len()
            )));
        }
        let n = coords.norm();
        if !(n < 1.0) {
            return Err(Error::OutsideBall(n));
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn origin(k: usize) -> Self {
        Self { coords: DVector::zeros(k) }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// `λ(x) = 2 / (1 - |x|²)`; chart vectors scaled by `λ` are orthonormal-frame
    /// components.
    pub fn conformal_factor(&self) -> f64 {
        2.0 / one_minus_sq(self.coords.norm())
    }

    /// Hyperboloid coordinates `(t, s)` with `-t² + |s|² = -1`, `t > 0`.
    pub fn to_hyperboloid(&self) -> DVector<f64> {
        let k = self.dim();
        let a = one_minus_sq(self.coords.norm());
        let r2 = self.coords.norm_squared();
        let mut out = DVector::zeros(k + 1);
        out[0] = (1.0 + r2) / a;
        for i in 0..k {
            out[i + 1] = 2.0 * self.coords[i] / a;
        }
        out
    }

    /// Inverse of [`HPoint::to_hyperboloid`]. Only the spatial part is used, so
    /// rounding drift off the hyperboloid never pushes the result out of the ball.
    pub fn from_hyperboloid(v: &DVector<f64>) -> Self {
        let s = v.rows(1, v.len() - 1).into_owned();
        let t = (1.0 + s.norm_squared()).sqrt();
        Self { coords: s / (1.0 + t) }
    }

    /// Ball point at hyperbolic distance `r` from `O` in direction `dir`.
    pub fn at_distance(dir: &BoundaryPoint, r: f64) -> Self {
        Self { coords: dir.direction() * (0.5 * r).tanh() }
    }

    /// Orthogonal embedding into a higher-dimensional ball (extra coordinates 0).
    pub fn embed(&self, m: usize) -> Self {
        let mut c = DVector::zeros(m);
        c.rows_mut(0, self.dim()).copy_from(&self.coords);
        Self { coords: c }
    }
}

/// A point on the ideal sphere `∂H^k`, i.e. a unit vector of length k.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    direction: DVector<f64>,
}

impl BoundaryPoint {
    pub fn new(direction: DVector<f64>) -> Result<Self> {
        let n = direction.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit(n));
        }
        Ok(Self { direction })
    }

    /// Normalizes any nonzero vector onto the sphere.
    pub fn normalized(v: DVector<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotUnit(n));
        }
        Ok(Self { direction: v / n })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::normalized(DVector::from_column_slice(v))
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn direction(&self) -> &DVector<f64> {
        &self.direction
    }

    /// Great-circle angle, accurate for nearby points.
    pub fn angle_to(&self, other: &BoundaryPoint) -> f64 {
        let chord = (&self.direction - &other.direction).norm();
        2.0 * (0.5 * chord).min(1.0).asin()
    }

    pub fn antipode(&self) -> Self {
        Self { direction: -&self.direction }
    }

    pub fn embed(&self, m: usize) -> Self {
        let mut c = DVector::zeros(m);
        c.rows_mut(0, self.dim()).copy_from(&self.direction);
        Self { direction: c }
    }

    /// Null vector `(1, θ)` of the light cone.
    pub fn to_null(&self) -> DVector<f64> {
        let k = self.dim();
        let mut v = DVector::zeros(k + 1);
        v[0] = 1.0;
        v.rows_mut(1, k).copy_from(&self.direction);
        v
    }

    /// Projects a future-pointing null (or near-null) vector to its direction.
    pub fn from_null(v: &DVector<f64>) -> Result<Self> {
        Self::normalized(v.rows(1, v.len() - 1).into_owned())
    }
}

/// A tangent vector at `base`, stored by its ball-chart components.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: HPoint,
    vec: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: HPoint, vec: DVector<f64>) -> Result<Self> {
        check_dim(base.dim(), vec.len())?;
        Ok(Self { base, vec })
    }

    pub fn zero(base: HPoint) -> Self {
        let k = base.dim();
        Self { base, vec: DVector::zeros(k) }
    }

    /// Builds a vector from its components in the orthonormal frame at `base`.
    pub fn from_frame(base: HPoint, frame: DVector<f64>) -> Result<Self> {
        let lambda = base.conformal_factor();
        Self::new(base, frame / lambda)
    }

    pub fn base(&self) -> &HPoint {
        &self.base
    }

    pub fn vec(&self) -> &DVector<f64> {
        &self.vec
    }

    pub fn frame_coords(&self) -> DVector<f64> {
        &self.vec * self.base.conformal_factor()
    }

    /// Riemannian norm `λ(x) |v|`.
    pub fn norm(&self) -> f64 {
        self.base.conformal_factor() * self.vec.norm()
    }

    /// Riemannian inner product with another vector at the same base point.
    pub fn inner(&self, other: &TangentVector) -> f64 {
        let l = self.base.conformal_factor();
        l * l * self.vec.dot(&other.vec)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { base: self.base.clone(), vec: &self.vec * s }
    }
}

/// Hyperbolic distance in the ball model.
pub fn distance(x: &HPoint, y: &HPoint) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    Ok(distance_unchecked(x, y))
}

pub(crate) fn distance_unchecked(x: &HPoint, y: &HPoint) -> f64 {
    let chord = (&x.coords - &y.coords).norm();
    let denom = (one_minus_sq(x.coords.norm()) * one_minus_sq(y.coords.norm())).sqrt();
    2.0 * (chord / denom).asinh()
}

/// Busemann function normalized at the origin:
/// `B(x, θ) = log(|x - θ|² / (1 - |x|²))`.
pub fn busemann(x: &HPoint, theta: &BoundaryPoint) -> Result<f64> {
    check_dim(x.dim(), theta.dim())?;
    Ok(busemann_unchecked(x, theta))
}

pub(crate) fn busemann_unchecked(x: &HPoint, theta: &BoundaryPoint) -> f64 {
    let d2 = (&x.coords - &theta.direction).norm_squared();
    (d2 / one_minus_sq(x.coords.norm())).ln()
}

/// Orthonormal-frame components of the (unit) gradient of `B(·, θ)` at `x`:
/// `x + (1 - |x|²)(x - θ) / |x - θ|²`.
pub(crate) fn busemann_unit_frame(x: &DVector<f64>, a: f64, theta: &DVector<f64>) -> DVector<f64> {
    let diff = x - theta;
    let d2 = diff.norm_squared();
    x + diff * (a / d2)
}

/// Riemannian gradient of `B(·, θ)` at `x`. It has unit length and points away
/// from `θ` along the geodesic through `x` asymptotic to `θ`.
pub fn busemann_gradient(x: &HPoint, theta: &BoundaryPoint) -> Result<TangentVector> {
    check_dim(x.dim(), theta.dim())?;
    let a = one_minus_sq(x.coords.norm());
    let frame = busemann_unit_frame(&x.coords, a, &theta.direction);
    TangentVector::from_frame(x.clone(), frame)
}

/// Hessian `∇dB(·, θ)` at `x` in the orthonormal frame. In curvature −1 it is
/// `g - dB ⊗ dB`.
pub fn busemann_hessian(x: &HPoint, theta: &BoundaryPoint) -> Result<DMatrix<f64>> {
    check_dim(x.dim(), theta.dim())?;
    let a = one_minus_sq(x.coords.norm());
    let u = busemann_unit_frame(&x.coords, a, &theta.direction);
    let k = x.dim();
    Ok(DMatrix::identity(k, k) - &u * u.transpose())
}

/// Möbius addition `a ⊕ b` in the unit ball.
pub fn mobius_add(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let ab = a.dot(b);
    let a2 = a.norm_squared();
    let b2 = b.norm_squared();
    let num = a * (1.0 + 2.0 * ab + b2) + b * (1.0 - a2);
    num / (1.0 + 2.0 * ab + a2 * b2)
}

/// Exponential map at `x`.
pub fn exp_map(x: &HPoint, v: &TangentVector) -> Result<HPoint> {
    check_dim(x.dim(), v.vec.len())?;
    let n = v.vec.norm();
    if n == 0.0 {
        return Ok(x.clone());
    }
    let lambda = x.conformal_factor();
    let step = &v.vec * ((0.5 * lambda * n).tanh() / n);
    let y = mobius_add(&x.coords, &step);
    // Points pushed to within rounding of the sphere are pulled back inside.
    let ny = y.norm();
    if ny >= 1.0 {
        return HPoint::new(y * ((1.0 - f64::EPSILON) / ny));
    }
    HPoint::new(y)
}

/// Logarithm map: the tangent vector at `x` whose exponential is `y`.
pub fn log_map(x: &HPoint, y: &HPoint) -> Result<TangentVector> {
    check_dim(x.dim(), y.dim())?;
    let w = mobius_add(&(-&x.coords), &y.coords);
    let n = w.norm();
    if n == 0.0 {
        return Ok(TangentVector::zero(x.clone()));
    }
    let lambda = x.conformal_factor();
    let vec = w * ((2.0 / lambda) * n.min(1.0 - f64::EPSILON).atanh() / n);
    TangentVector::new(x.clone(), vec)
}

/// Point at fraction `s` of the geodesic from `x` to `y`.
pub fn geodesic_point(x: &HPoint, y: &HPoint, s: f64) -> Result<HPoint> {
    let v = log_map(x, y)?;
    exp_map(x, &v.scale(s))
}

fn lorentz_dot(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    -a[0] * b[0] + a.rows(1, a.len() - 1).dot(&b.rows(1, b.len() - 1))
}

fn tangent_to_hyperboloid(x: &HPoint, v: &DVector<f64>) -> DVector<f64> {
    let a = one_minus_sq(x.coords.norm());
    let xv = x.coords.dot(v);
    let k = x.dim();
    let mut out = DVector::zeros(k + 1);
    out[0] = 4.0 * xv / (a * a);
    let spatial = v * (2.0 / a) + &x.coords * (4.0 * xv / (a * a));
    out.rows_mut(1, k).copy_from(&spatial);
    out
}

fn tangent_from_hyperboloid(p: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let k = p.len() - 1;
    let t = p[0];
    let s = p.rows(1, k);
    let ws = w.rows(1, k);
    (ws / (1.0 + t)) - s * (w[0] / ((1.0 + t) * (1.0 + t)))
}

/// Parallel transport of `v` (based at `x`) to `y` along the geodesic.
pub fn parallel_transport(x: &HPoint, y: &HPoint, v: &TangentVector) -> Result<TangentVector> {
    check_dim(x.dim(), y.dim())?;
    check_dim(x.dim(), v.vec.len())?;
    let px = x.to_hyperboloid();
    let py = y.to_hyperboloid();
    let w = tangent_to_hyperboloid(x, &v.vec);
    let c = lorentz_dot(&py, &w) / (1.0 - lorentz_dot(&px, &py));
    let moved = w + (&px + &py) * c;
    TangentVector::new(y.clone(), tangent_from_hyperboloid(&py, &moved))
}

/// Matrix of parallel transport from `x` to `y` in the orthonormal frames.
pub fn transport_matrix(x: &HPoint, y: &HPoint) -> Result<DMatrix<f64>> {
    let k = x.dim();
    let mut m = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut e = DVector::zeros(k);
        e[j] = 1.0;
        let v = TangentVector::from_frame(x.clone(), e)?;
        let moved = parallel_transport(x, y, &v)?;
        m.set_column(j, &moved.frame_coords());
    }
    Ok(m)
}

/// Lorentz form `diag(-1, 1, …, 1)` of size `n`.
pub fn lorentz_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::identity(n, n);
    j[(0, 0)] = -1.0;
    j
}

/// Kind of an isometry according to its dynamics on the closed ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Loxodromic,
}

/// An element of `Isom(H^k)` stored as a Lorentz matrix in `O(k,1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    lorentz: DMatrix<f64>,
    orientation: i8,
}

impl Isometry {
    /// Validates `gᵀ J g = J` (relative to `|g|²`) and `g[0,0] > 0`.
    pub fn new(lorentz: DMatrix<f64>) -> Result<Self> {
        if lorentz.nrows() != lorentz.ncols() || lorentz.nrows() < 3 {
            return Err(Error::InvalidParameter(format!(
                "Lorentz matrix must be square of size ≥ 3, got {}x{}",
                lorentz.nrows(),
                lorentz.ncols()
            )));
        }
        let g = Self::from_lorentz_unchecked(lorentz);
        let defect = g.lorentz_defect();
        if defect > LORENTZ_TOL || !(g.lorentz[(0, 0)] > 0.0) {
            return Err(Error::NotLorentz(defect));
        }
        Ok(g)
    }

    pub(crate) fn from_lorentz_unchecked(lorentz: DMatrix<f64>) -> Self {
        let orientation = if lorentz.determinant() < 0.0 { -1 } else { 1 };
        Self { lorentz, orientation }
    }

    pub(crate) fn with_orientation(lorentz: DMatrix<f64>, orientation: i8) -> Self {
        Self { lorentz, orientation }
    }

    pub fn identity(k: usize) -> Self {
        Self { lorentz: DMatrix::identity(k + 1, k + 1), orientation: 1 }
    }

    /// Dimension `k` of the hyperbolic space acted on.
    pub fn dim(&self) -> usize {
        self.lorentz.nrows() - 1
    }

    pub fn lorentz(&self) -> &DMatrix<f64> {
        &self.lorentz
    }

    pub fn orientation(&self) -> i8 {
        self.orientation
    }

    /// `max |gᵀ J g - J| / max(1, |g|²)`.
    pub fn lorentz_defect(&self) -> f64 {
        let n = self.lorentz.nrows();
        let j = lorentz_form(n);
        let d = self.lorentz.transpose() * &j * &self.lorentz - j;
        let scale = self.lorentz.norm_squared().max(1.0);
        d.amax() / scale
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            lorentz: &self.lorentz * &other.lorentz,
            orientation: self.orientation * other.orientation,
        }
    }

    /// `J gᵀ J`.
    pub fn inverse(&self) -> Isometry {
        let n = self.lorentz.nrows();
        let j = lorentz_form(n);
        Isometry { lorentz: &j * self.lorentz.transpose() * &j, orientation: self.orientation }
    }

    /// `h ∘ self ∘ h⁻¹`.
    pub fn conjugate_by(&self, h: &Isometry) -> Isometry {
        h.compose(self).compose(&h.inverse())
    }

    /// Pure boost sending the origin to `p`.
    pub fn boost_to(p: &HPoint) -> Isometry {
        let v = p.to_hyperboloid();
        let k = p.dim();
        let t = v[0];
        let s = v.rows(1, k).into_owned();
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m[(0, 0)] = t;
        for i in 0..k {
            m[(0, i + 1)] = s[i];
            m[(i + 1, 0)] = s[i];
        }
        let block = DMatrix::identity(k, k) + &s * s.transpose() / (1.0 + t);
        m.view_mut((1, 1), (k, k)).copy_from(&block);
        Isometry { lorentz: m, orientation: 1 }
    }

    /// Hyperbolic translation of length `length` along the geodesic through `O`
    /// in direction `axis`.
    pub fn translation(axis: &BoundaryPoint, length: f64) -> Isometry {
        Self::boost_to(&HPoint::at_distance(axis, length))
    }

    /// Rotation fixing `O`, given by an orthogonal `k×k` matrix.
    pub fn rotation(q: DMatrix<f64>) -> Result<Isometry> {
        let k = q.nrows();
        let defect = (q.transpose() * &q - DMatrix::identity(k, k)).amax();
        if q.ncols() != k || defect > LORENTZ_TOL {
            return Err(Error::NotLorentz(defect));
        }
        let mut m = DMatrix::identity(k + 1, k + 1);
        m.view_mut((1, 1), (k, k)).copy_from(&q);
        Ok(Isometry::from_lorentz_unchecked(m))
    }

    /// Random isometry: a Haar-random orthogonal map followed by a boost to a
    /// point at hyperbolic distance at most `radius` from `O`.
    pub fn random<R: Rng + ?Sized>(k: usize, radius: f64, rng: &mut R) -> Isometry {
        let q = random_orthogonal(k, rng);
        let dir = random_direction(k, rng);
        let r = radius * rng.random::<f64>();
        let boost = Self::boost_to(&HPoint::at_distance(&dir, r));
        boost.compose(&Isometry::from_lorentz_unchecked({
            let mut m = DMatrix::identity(k + 1, k + 1);
            m.view_mut((1, 1), (k, k)).copy_from(&q);
            m
        }))
    }

    /// Extension to `H^m ⊃ H^k` acting trivially on the extra coordinates.
    pub fn embed(&self, m: usize) -> Isometry {
        let k = self.dim();
        let mut out = DMatrix::identity(m + 1, m + 1);
        out.view_mut((0, 0), (k + 1, k + 1)).copy_from(&self.lorentz);
        Isometry { lorentz: out, orientation: self.orientation }
    }

    pub fn act(&self, x: &HPoint) -> Result<HPoint> {
        check_dim(self.dim(), x.dim())?;
        Ok(HPoint::from_hyperboloid(&(&self.lorentz * x.to_hyperboloid())))
    }

    pub fn act_boundary(&self, theta: &BoundaryPoint) -> Result<BoundaryPoint> {
        check_dim(self.dim(), theta.dim())?;
        BoundaryPoint::from_null(&(&self.lorentz * theta.to_null()))
    }

    /// Pushes a tangent vector forward.
    pub fn act_tangent(&self, v: &TangentVector) -> Result<TangentVector> {
        check_dim(self.dim(), v.base.dim())?;
        let p = v.base.to_hyperboloid();
        let w = tangent_to_hyperboloid(&v.base, &v.vec);
        let gp = &self.lorentz * p;
        let gw = &self.lorentz * w;
        let y = HPoint::from_hyperboloid(&gp);
        TangentVector::new(y.clone(), tangent_from_hyperboloid(&y.to_hyperboloid(), &gw))
    }
}

/// Continuous extension of the ball action to the ideal sphere.
pub fn boundary_action(g: &Isometry, theta: &BoundaryPoint) -> Result<BoundaryPoint> {
    g.act_boundary(theta)
}

/// Translation length `inf_y d(gy, y)`.
///
/// Orientation-preserving isometries of H³ (and of H², through the totally
/// geodesic embedding) go through their SL(2,C) lift, where
/// `ℓ = 2 Re arccosh(tr/2)` is well conditioned for parabolic elements.
/// Other dimensions use the largest eigenvalue modulus of the Lorentz matrix.
pub fn translation_length(g: &Isometry) -> f64 {
    if g.orientation < 0 {
        return 0.5 * translation_length(&g.compose(g));
    }
    match g.dim() {
        2 => translation_length(&g.embed(3)),
        3 => match spin::isometry_to_sl2(g) {
            Some(a) => spin::translation_length_sl2(&a),
            None => translation_length_eigen(g),
        },
        _ => translation_length_eigen(g),
    }
}

fn translation_length_eigen(g: &Isometry) -> f64 {
    let ev = g.lorentz.complex_eigenvalues();
    let rho = ev.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    rho.ln().max(0.0)
}

/// Noise floor for the loxodromic test. Parabolic elements are defective, so
/// rounding perturbs their length by roughly `sqrt(eps) |g|`.
fn classify_floor(g: &Isometry) -> f64 {
    let scale = g.lorentz.norm().max(1.0);
    let noise = if g.dim() <= 3 {
        8.0 * (f64::EPSILON * scale * scale).sqrt()
    } else {
        8.0 * (f64::EPSILON * scale * scale).cbrt()
    };
    CLASSIFY_TOL.max(noise)
}

/// Elliptic / parabolic / loxodromic classification.
pub fn classify(g: &Isometry) -> IsometryKind {
    if translation_length(g) > classify_floor(g) {
        return IsometryKind::Loxodromic;
    }
    let k = g.dim();
    if (g.lorentz() - DMatrix::identity(k + 1, k + 1)).amax() < 1e-12 * g.lorentz.amax().max(1.0) {
        return IsometryKind::Elliptic;
    }
    // Elliptic elements fix an interior point; the attracting-point search
    // only succeeds when the orbit of the origin escapes to the sphere.
    match attracting_fixed_point(g) {
        Some(_) => {
            let n = power_by_squaring(g, 30);
            if n.norm() > 1e6 * g.lorentz.norm().max(1.0) {
                IsometryKind::Parabolic
            } else {
                IsometryKind::Elliptic
            }
        }
        None => IsometryKind::Elliptic,
    }
}

fn power_by_squaring(g: &Isometry, squarings: usize) -> DMatrix<f64> {
    let mut m = g.lorentz.clone();
    for _ in 0..squarings {
        m = &m * &m;
        if !m.iter().all(|x| x.is_finite()) || m.amax() > 1e150 {
            break;
        }
    }
    m
}

/// Attracting fixed point on the sphere, found by normalized repeated
/// squaring. Returns `None` when no boundary point is fixed (elliptic case).
pub fn attracting_fixed_point(g: &Isometry) -> Option<BoundaryPoint> {
    let mut m = g.lorentz.clone() / g.lorentz.norm();
    for _ in 0..64 {
        m = &m * &m;
        let n = m.norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        m /= n;
    }
    let mut best = 0;
    for j in 0..m.ncols() {
        if m.column(j).norm() > m.column(best).norm() {
            best = j;
        }
    }
    let mut v = m.column(best).into_owned();
    if v[0] < 0.0 {
        v = -v;
    }
    let k = g.dim();
    let spatial = v.rows(1, k).norm();
    if !(v[0] > 0.0) || (spatial / v[0] - 1.0).abs() > 1e-6 {
        return None;
    }
    let p = BoundaryPoint::normalized(v.rows(1, k).into_owned()).ok()?;
    let moved = g.act_boundary(&p).ok()?;
    if moved.angle_to(&p) > 1e-6 {
        return None;
    }
    Some(p)
}

/// Fixed points on the sphere: `[attracting, repelling]` for loxodromic
/// elements, `[p]` for parabolic ones, empty otherwise.
pub fn fixed_points(g: &Isometry) -> Vec<BoundaryPoint> {
    match classify(g) {
        IsometryKind::Elliptic => Vec::new(),
        IsometryKind::Parabolic => attracting_fixed_point(g).into_iter().collect(),
        IsometryKind::Loxodromic => {
            let mut out = Vec::new();
            if let Some(p) = attracting_fixed_point(g) {
                out.push(p);
            }
            if let Some(q) = attracting_fixed_point(&g.inverse()) {
                out.push(q);
            }
            out
        }
    }
}

/// Uniformly distributed unit vector.
pub fn random_direction<R: Rng + ?Sized>(k: usize, rng: &mut R) -> BoundaryPoint {
    loop {
        let v = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        if v.norm() > 1e-8 {
            return BoundaryPoint::normalized(v).expect("nonzero vector");
        }
    }
}

/// Random point at hyperbolic distance at most `radius` from `O`.
pub fn random_point<R: Rng + ?Sized>(k: usize, radius: f64, rng: &mut R) -> HPoint {
    let dir = random_direction(k, rng);
    HPoint::at_distance(&dir, radius * rng.random::<f64>())
}

/// Haar-random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    /// Length of the radial segment from O to r e₁ by Simpson's rule on the
    /// ball metric `2 / (1 - s²)`.
    fn radial_length_oracle(r: f64) -> f64 {
        let n = 20_000;
        let h = r / n as f64;
        let f = |s: f64| 2.0 / (1.0 - s * s);
        let mut acc = f(0.0) + f(r);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn distance_from_origin_matches_closed_form_and_quadrature() {
        let o = HPoint::origin(3);
        assert_eq!(distance(&o, &o).unwrap(), 0.0);
        let x = HPoint::from_slice(&[0.5, 0.0, 0.0]).unwrap();
        let d = distance(&o, &x).unwrap();
        assert!((d - 3.0_f64.ln()).abs() < 1e-15);
        assert!((d - 1.0986122886681098).abs() < 1e-12);
        assert!((d - radial_length_oracle(0.5)).abs() < 1e-10);
    }

    #[test]
    fn distance_is_isometry_invariant() {
        let mut r = rng();
        for _ in 0..50 {
            let g = Isometry::random(3, 2.0, &mut r);
            let x = random_point(3, 2.0, &mut r);
            let y = random_point(3, 2.0, &mut r);
            let d0 = distance(&x, &y).unwrap();
            let d1 = distance(&g.act(&x).unwrap(), &g.act(&y).unwrap()).unwrap();
            assert!((d0 - d1).abs() < 1e-10, "{d0} vs {d1}");
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let x = HPoint::origin(3);
        let y = HPoint::origin(2);
        assert!(matches!(distance(&x, &y), Err(Error::DimensionMismatch { .. })));
        let t = BoundaryPoint::from_slice(&[1.0, 0.0]).unwrap();
        assert!(busemann(&x, &t).is_err());
    }

    #[test]
    fn point_outside_ball_is_rejected() {
        assert!(matches!(HPoint::from_slice(&[1.0, 0.0]), Err(Error::OutsideBall(_))));
        assert!(BoundaryPoint::new(DVector::from_column_slice(&[0.5, 0.0])).is_err());
    }

    /// `lim_{t→∞} d(x, c(t)) - t` evaluated at t = 20 on the hyperboloid.
    fn busemann_limit_oracle(x: &HPoint, theta: &BoundaryPoint) -> f64 {
        let t = 20.0_f64;
        let px = x.to_hyperboloid();
        let mut c = DVector::zeros(x.dim() + 1);
        c[0] = t.cosh();
        c.rows_mut(1, x.dim()).copy_from(&(theta.direction() * t.sinh()));
        let cosh_d = -lorentz_dot(&px, &c);
        cosh_d.acosh() - t
    }

    #[test]
    fn busemann_values_on_the_ray() {
        let theta = BoundaryPoint::from_slice(&[0.0, 1.0, 0.0]).unwrap();
        let o = HPoint::origin(3);
        assert_eq!(busemann(&o, &theta).unwrap(), 0.0);
        let toward = HPoint::new(theta.direction() * 0.5).unwrap();
        let away = HPoint::new(theta.direction() * -0.5).unwrap();
        let b1 = busemann(&toward, &theta).unwrap();
        let b2 = busemann(&away, &theta).unwrap();
        assert!((b1 + 1.0986122886681098).abs() < 1e-12);
        assert!((b2 - 3.0_f64.ln()).abs() < 1e-12);
        assert!((b1 - busemann_limit_oracle(&toward, &theta)).abs() < 1e-8);
        assert!((b2 - busemann_limit_oracle(&away, &theta)).abs() < 1e-8);
        let mut r = rng();
        for _ in 0..20 {
            let x = random_point(3, 2.0, &mut r);
            let th = random_direction(3, &mut r);
            let b = busemann(&x, &th).unwrap();
            assert!((b - busemann_limit_oracle(&x, &th)).abs() < 1e-6);
        }
    }

    #[test]
    fn busemann_gradient_is_unit_and_matches_finite_differences() {
        let mut r = rng();
        let h = 1e-5;
        for _ in 0..30 {
            let x = random_point(3, 2.0, &mut r);
            let th = random_direction(3, &mut r);
            let g = busemann_gradient(&x, &th).unwrap();
            assert!((g.norm() - 1.0).abs() < 1e-9);
            let u = random_direction(3, &mut r);
            let v = TangentVector::from_frame(x.clone(), u.direction().clone()).unwrap();
            let fwd = exp_map(&x, &v.scale(h)).unwrap();
            let bwd = exp_map(&x, &v.scale(-h)).unwrap();
            let fd = (busemann(&fwd, &th).unwrap() - busemann(&bwd, &th).unwrap()) / (2.0 * h);
            assert!((fd - g.inner(&v)).abs() < 1e-6);
        }
        // On the ray toward θ the gradient is minus the unit tangent toward θ.
        let th = BoundaryPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        let x = HPoint::from_slice(&[0.3, 0.0, 0.0]).unwrap();
        let fc = busemann_gradient(&x, &th).unwrap().frame_coords();
        assert!((fc - DVector::from_column_slice(&[-1.0, 0.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn busemann_is_one_lipschitz() {
        let mut r = rng();
        for _ in 0..200 {
            let x = random_point(4, 3.0, &mut r);
            let y = random_point(4, 3.0, &mut r);
            let th = random_direction(4, &mut r);
            let diff = (busemann(&x, &th).unwrap() - busemann(&y, &th).unwrap()).abs();
            assert!(diff <= distance(&x, &y).unwrap() + 1e-12);
        }
    }

    #[test]
    fn hessian_is_identity_minus_gradient_square() {
        let mut r = rng();
        for _ in 0..30 {
            let x = random_point(3, 2.0, &mut r);
            let th = random_direction(3, &mut r);
            let hess = busemann_hessian(&x, &th).unwrap();
            let g = busemann_gradient(&x, &th).unwrap().frame_coords();
            assert!((hess.trace() - 2.0).abs() < 1e-12);
            assert!((&hess * &g).norm() < 1e-12);
            let rhs = DMatrix::identity(3, 3) - &g * g.transpose();
            assert!((&hess - rhs).norm() < 1e-8);
        }
    }

    #[test]
    fn hessian_second_difference_along_orthogonal_geodesic() {
        let mut r = rng();
        let h = 1e-3;
        for _ in 0..10 {
            let x = random_point(3, 1.5, &mut r);
            let th = random_direction(3, &mut r);
            let g = busemann_gradient(&x, &th).unwrap().frame_coords();
            // unit frame vector orthogonal to grad B
            let mut u = random_direction(3, &mut r).direction().clone();
            u -= &g * g.dot(&u);
            u /= u.norm();
            let v = TangentVector::from_frame(x.clone(), u).unwrap();
            let f = |s: f64| busemann(&exp_map(&x, &v.scale(s)).unwrap(), &th).unwrap();
            let second = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
            assert!((second - 1.0).abs() < 1e-5, "{second}");
        }
    }

    #[test]
    fn exp_log_round_trip_and_transport_isometry() {
        let o = HPoint::origin(3);
        assert_eq!(exp_map(&o, &TangentVector::zero(o.clone())).unwrap(), o);
        let mut r = rng();
        for _ in 0..50 {
            let x = random_point(3, 3.0, &mut r);
            let y = random_point(3, 3.0, &mut r);
            let v = log_map(&x, &y).unwrap();
            let y2 = exp_map(&x, &v).unwrap();
            assert!(distance(&y, &y2).unwrap() < 1e-9);
            assert!((v.norm() - distance(&x, &y).unwrap()).abs() < 1e-9);
            let w = TangentVector::from_frame(x.clone(), random_direction(3, &mut r).direction() * 0.7).unwrap();
            let pw = parallel_transport(&x, &y, &w).unwrap();
            assert!((pw.norm() - w.norm()).abs() < 1e-10);
            // transporting the geodesic direction gives the geodesic direction at y
            let back = log_map(&y, &x).unwrap();
            let pv = parallel_transport(&x, &y, &v).unwrap();
            assert!((pv.frame_coords() + back.frame_coords()).norm() < 1e-8);
        }
    }

    #[test]
    fn isometry_group_closure() {
        let mut r = rng();
        for _ in 0..30 {
            let g = Isometry::random(3, 3.0, &mut r);
            let h = Isometry::random(3, 3.0, &mut r);
            assert!(g.compose(&h).lorentz_defect() < 1e-9);
            assert!(g.inverse().lorentz_defect() < 1e-9);
            let e = g.compose(&g.inverse());
            assert!((e.lorentz() - DMatrix::identity(4, 4)).amax() < 1e-9);
            assert!(Isometry::new(g.lorentz().clone()).is_ok());
        }
        let mut bad = DMatrix::identity(4, 4);
        bad[(0, 1)] = 0.3;
        assert!(matches!(Isometry::new(bad), Err(Error::NotLorentz(_))));
    }

    #[test]
    fn boundary_action_is_functorial() {
        let mut r = rng();
        let th = random_direction(3, &mut r);
        assert_eq!(boundary_action(&Isometry::identity(3), &th).unwrap(), th);
        for _ in 0..30 {
            let g = Isometry::random(3, 2.0, &mut r);
            let h = Isometry::random(3, 2.0, &mut r);
            let th = random_direction(3, &mut r);
            let a = boundary_action(&g.compose(&h), &th).unwrap();
            let b = boundary_action(&g, &boundary_action(&h, &th).unwrap()).unwrap();
            assert!(a.angle_to(&b) < 1e-10);
        }
    }

    #[test]
    fn boundary_action_extends_ball_action() {
        let mut r = rng();
        let g = Isometry::random(3, 2.0, &mut r);
        let th = random_direction(3, &mut r);
        let near = HPoint::at_distance(&th, 30.0);
        let img = g.act(&near).unwrap();
        let bnd = g.act_boundary(&th).unwrap();
        assert!((img.coords() - bnd.direction()).norm() < 1e-9);
    }

    /// Eigen-decomposition oracle: null vectors of `g - λI` for the real
    /// eigenvalues of largest and smallest modulus.
    fn eigen_fixed_points(g: &Isometry) -> Vec<DVector<f64>> {
        let ev = g.lorentz().complex_eigenvalues();
        let mut reals: Vec<f64> = ev.iter().filter(|z| z.im.abs() < 1e-9).map(|z| z.re).collect();
        reals.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        let picks = [*reals.last().unwrap(), reals[0]];
        picks
            .iter()
            .map(|&l| {
                let n = g.lorentz().nrows();
                let m = g.lorentz() - DMatrix::identity(n, n) * l;
                let svd = m.svd(true, true);
                let vt = svd.v_t.unwrap();
                let (imin, _) = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap();
                let v = vt.row(imin).transpose();
                let v = if v[0] < 0.0 { -v } else { v };
                v.rows(1, n - 1).into_owned() / v[0]
            })
            .collect()
    }

    #[test]
    fn loxodromic_fixes_exactly_two_boundary_points() {
        let mut r = rng();
        for _ in 0..10 {
            let h = Isometry::random(3, 1.5, &mut r);
            let axis = random_direction(3, &mut r);
            let g = Isometry::translation(&axis, 1.3).conjugate_by(&h);
            assert_eq!(classify(&g), IsometryKind::Loxodromic);
            let fps = fixed_points(&g);
            assert_eq!(fps.len(), 2);
            let oracle = eigen_fixed_points(&g);
            assert!((fps[0].direction() - &oracle[0]).norm() < 1e-8);
            assert!((fps[1].direction() - &oracle[1]).norm() < 1e-8);
            for p in &fps {
                assert!(g.act_boundary(p).unwrap().angle_to(p) < 1e-9);
            }
            // a generic point is moved
            let q = random_direction(3, &mut r);
            assert!(g.act_boundary(&q).unwrap().angle_to(&q) > 1e-6);
        }
    }

    #[test]
    fn translation_length_cases() {
        assert!(translation_length(&Isometry::identity(3)) < 1e-12);
        let axis = BoundaryPoint::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let g = Isometry::translation(&axis, 2.0);
        assert!((translation_length(&g) - 2.0).abs() < 1e-12);
        let mut r = rng();
        for _ in 0..20 {
            let h = Isometry::random(3, 2.0, &mut r);
            let c = g.conjugate_by(&h);
            assert!((translation_length(&c) - 2.0).abs() < 1e-9);
            // never exceeds sampled displacements
            let y = random_point(3, 2.0, &mut r);
            assert!(translation_length(&c) <= distance(&c.act(&y).unwrap(), &y).unwrap() + 1e-9);
        }
        let g4 = Isometry::translation(&BoundaryPoint::from_slice(&[0.0, 1.0, 0.0, 0.0]).unwrap(), 0.7);
        let h4 = Isometry::random(4, 1.0, &mut r);
        assert!((translation_length(&g4.conjugate_by(&h4)) - 0.7).abs() < 1e-8);
        let g2 = Isometry::translation(&BoundaryPoint::from_slice(&[0.6, 0.8]).unwrap(), 1.1);
        assert!((translation_length(&g2) - 1.1).abs() < 1e-10);
    }

    #[test]
    fn rotation_is_elliptic() {
        let c = 0.3_f64.cos();
        let s = 0.3_f64.sin();
        let q = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let g = Isometry::rotation(q).unwrap();
        assert_eq!(classify(&g), IsometryKind::Elliptic);
        assert!(translation_length(&g) < 1e-12);
        assert!(fixed_points(&g).is_empty());
    }
}
