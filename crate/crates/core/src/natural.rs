//! Representations, equivariant boundary maps and the barycentric natural map
//! `F(x) = bar(D_* μ_x)` together with its operators, Jacobian and bounds.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::barycenter::{barycenter, barycenter_from, BarycenterLocation, SolverConfig};
use crate::error::{Error, Result};
use crate::hyperbolic::{
    busemann_unit_frame, classify, distance, exp_map, fixed_points, log_map, translation_length, BoundaryPoint,
    HPoint, Isometry, IsometryKind, TangentVector,
};
use crate::measure::{max_atom_mass, BoundaryMeasure, VisualFamily};

/// Relators must evaluate to the identity within this max-entry tolerance.
pub const RELATOR_TOL: f64 = 1e-8;
/// Tolerance for shared fixed points in the elementarity test.
pub const ELEMENTARY_TOL: f64 = 1e-8;
/// Below this eigenvalue of `K` the implicit Jacobian is not trusted.
pub const K_MIN_EIGENVALUE: f64 = 1e-6;
/// Default finite-difference step in normal coordinates.
pub const FD_STEP: f64 = 1e-4;

/// A word in the generators: letter `i+1` is generator `i`, `-(i+1)` its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Free reduction.
    pub fn reduced(&self) -> Self {
        let mut out: Vec<i32> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self(out)
    }

    pub fn concat(&self, other: &Word) -> Self {
        Self(self.0.iter().chain(other.0.iter()).cloned().collect()).reduced()
    }

    /// All reduced words of length `1..=max_len` in `gens` generators, in
    /// shortlex order.
    pub fn enumerate(gens: usize, max_len: usize) -> Vec<Word> {
        let letters: Vec<i32> = (1..=gens as i32).flat_map(|g| [g, -g]).collect();
        let mut out = Vec::new();
        let mut layer = vec![Word::identity()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &layer {
                for &l in &letters {
                    if w.0.last() == Some(&-l) {
                        continue;
                    }
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for &l in &self.0 {
            let c = (b'a' + (l.unsigned_abs() - 1) as u8) as char;
            write!(f, "{}", if l > 0 { c } else { c.to_ascii_uppercase() })?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Lowercase letters are generators (`a` = 0), uppercase their inverses;
    /// `1` or the empty string is the identity.
    fn from_str(s: &str) -> Result<Self> {
        if s == "1" {
            return Ok(Self::identity());
        }
        s.chars()
            .map(|c| {
                if c.is_ascii_lowercase() {
                    Ok((c as u8 - b'a') as i32 + 1)
                } else if c.is_ascii_uppercase() {
                    Ok(-((c as u8 - b'A') as i32 + 1))
                } else {
                    Err(Error::InvalidParameter(format!("invalid letter {c:?} in word {s:?}")))
                }
            })
            .collect::<Result<Vec<i32>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A homomorphism from a finitely presented group to `Isom(H^m)`, given by
/// generator images, together with the source dimension `k` of the lattice
/// it is compared with.
#[derive(Clone, Debug)]
pub struct Representation {
    generators: Vec<Isometry>,
    inverses: Vec<Isometry>,
    relators: Vec<Word>,
    source_dim: usize,
}

impl Representation {
    /// Checks that generators share a dimension and every relator is trivial
    /// within [`RELATOR_TOL`].
    pub fn new(generators: Vec<Isometry>, relators: Vec<Word>, source_dim: usize) -> Result<Self> {
        let rep = Self::unchecked(generators, relators, source_dim)?;
        let r = rep.relator_residual();
        if r > RELATOR_TOL {
            return Err(Error::InvalidParameter(format!("relator residual {r:e} exceeds {RELATOR_TOL:e}")));
        }
        Ok(rep)
    }

    /// Builds the representation without checking relators.
    pub fn unchecked(generators: Vec<Isometry>, relators: Vec<Word>, source_dim: usize) -> Result<Self> {
        let m = generators
            .first()
            .map(|g| g.dim())
            .ok_or_else(|| Error::InvalidParameter("representation needs a generator".into()))?;
        if let Some(g) = generators.iter().find(|g| g.dim() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: g.dim() });
        }
        for r in &relators {
            if let Some(&l) = r.0.iter().find(|l| l.unsigned_abs() as usize > generators.len() || **l == 0) {
                return Err(Error::InvalidParameter(format!("relator {r} uses unknown letter {l}")));
            }
        }
        let inverses = generators.iter().map(|g| g.inverse()).collect();
        Ok(Self { generators, inverses, relators, source_dim })
    }

    pub fn generators(&self) -> &[Isometry] {
        &self.generators
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn eval(&self, w: &Word) -> Isometry {
        let mut m = DMatrix::identity(self.target_dim() + 1, self.target_dim() + 1);
        let mut orientation = 1;
        for &l in &w.0 {
            let g = if l > 0 { &self.generators[(l - 1) as usize] } else { &self.inverses[(-l - 1) as usize] };
            m *= g.lorentz();
            orientation *= g.orientation();
        }
        Isometry::with_orientation(m, orientation)
    }

    /// Largest `max |ρ(r) - I|` over relators.
    pub fn relator_residual(&self) -> f64 {
        let n = self.target_dim() + 1;
        self.relators
            .iter()
            .map(|r| (self.eval(r).lorentz() - DMatrix::identity(n, n)).amax())
            .fold(0.0, f64::max)
    }

    /// `h ρ h⁻¹`.
    pub fn conjugate(&self, h: &Isometry) -> Self {
        let gens = self.generators.iter().map(|g| g.conjugate_by(h)).collect();
        Self::unchecked(gens, self.relators.clone(), self.source_dim).expect("same shape")
    }

    /// Composition with the totally geodesic inclusion `H^m ⊂ H^n`.
    pub fn embed(&self, n: usize) -> Self {
        let gens = self.generators.iter().map(|g| g.embed(n)).collect();
        Self::unchecked(gens, self.relators.clone(), self.source_dim).expect("same shape")
    }

    /// Translation lengths of the generators.
    pub fn generator_lengths(&self) -> Vec<f64> {
        self.generators.iter().map(translation_length).collect()
    }
}

/// Whether all generators fix a common boundary point or preserve a common
/// pair of boundary points, or no short word acts with a boundary fixed
/// point at all.
pub fn is_elementary(rep: &Representation) -> bool {
    let mut words: Vec<Word> = Word::enumerate(rep.generators.len(), 2);
    words.truncate(64);
    let mut candidates: Vec<BoundaryPoint> = Vec::new();
    let mut any_nonelliptic = false;
    for w in &words {
        let g = rep.eval(w);
        if classify(&g) != IsometryKind::Elliptic {
            any_nonelliptic = true;
            candidates.extend(fixed_points(&g));
        }
    }
    if !any_nonelliptic {
        return true;
    }
    let fixes = |g: &Isometry, p: &BoundaryPoint| g.act_boundary(p).map(|q| q.angle_to(p) <= ELEMENTARY_TOL).unwrap_or(false);
    for p in &candidates {
        if rep.generators.iter().all(|g| fixes(g, p)) {
            return true;
        }
    }
    for (i, p) in candidates.iter().enumerate() {
        for q in &candidates[i + 1..] {
            if p.angle_to(q) <= ELEMENTARY_TOL {
                continue;
            }
            let preserves = rep.generators.iter().all(|g| {
                let (gp, gq) = match (g.act_boundary(p), g.act_boundary(q)) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => return false,
                };
                let same = gp.angle_to(p) <= ELEMENTARY_TOL && gq.angle_to(q) <= ELEMENTARY_TOL;
                let swapped = gp.angle_to(q) <= ELEMENTARY_TOL && gq.angle_to(p) <= ELEMENTARY_TOL;
                same || swapped
            });
            if preserves {
                return true;
            }
        }
    }
    false
}

/// How the orbit table extends the boundary map from group data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitRule {
    /// `D(θ) = ρ(γ) i(γ)⁻¹ θ` for the table word `γ` whose orbit point
    /// `i(γ)O` lies furthest toward `θ` (smallest `B(i(γ)O, θ)`).
    Shadow,
    /// `D(θ)` is the attracting fixed point of `ρ(γ)` for the table word whose
    /// `i(γ)` has its attracting fixed point nearest to `θ`.
    FixedPoints,
}

/// Table-based surrogate for the equivariant boundary map between a lattice
/// representation `i` and a representation `ρ` of the same group.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    rule: OrbitRule,
    words: Vec<Word>,
    /// Hyperboloid coordinates of `i(γ)O` (shadow rule) or the attracting fixed
    /// point of `i(γ)` (fixed-point rule).
    keys: Vec<DVector<f64>>,
    source_inverse: Vec<DMatrix<f64>>,
    target: Vec<DMatrix<f64>>,
    target_fixed: Vec<Option<BoundaryPoint>>,
    target_rep: Representation,
}

impl OrbitTable {
    pub fn build(source: &Representation, target: &Representation, max_len: usize, rule: OrbitRule) -> Result<Self> {
        if source.generators.len() != target.generators.len() {
            return Err(Error::InvalidParameter("source and target have different generator counts".into()));
        }
        if source.target_dim() != target.target_dim() {
            return Err(Error::DimensionMismatch { expected: source.target_dim(), found: target.target_dim() });
        }
        let mut words = vec![Word::identity()];
        words.extend(Word::enumerate(source.generators.len(), max_len));
        let mut table = Self {
            rule,
            words: Vec::new(),
            keys: Vec::new(),
            source_inverse: Vec::new(),
            target: Vec::new(),
            target_fixed: Vec::new(),
            target_rep: target.clone(),
        };
        let k = source.target_dim();
        for w in words {
            let s = source.eval(&w);
            let t = target.eval(&w);
            let key = match rule {
                OrbitRule::Shadow => s.lorentz().column(0).into_owned(),
                OrbitRule::FixedPoints => {
                    if classify(&s) != IsometryKind::Loxodromic {
                        continue;
                    }
                    match crate::hyperbolic::attracting_fixed_point(&s) {
                        Some(p) => {
                            let mut v = DVector::zeros(k + 1);
                            v.rows_mut(1, k).copy_from(p.direction());
                            v
                        }
                        None => continue,
                    }
                }
            };
            let fixed = match rule {
                OrbitRule::Shadow => None,
                OrbitRule::FixedPoints => {
                    crate::hyperbolic::attracting_fixed_point(&t).or_else(|| fixed_points(&t).into_iter().next())
                }
            };
            if rule == OrbitRule::FixedPoints && fixed.is_none() {
                continue;
            }
            table.keys.push(key);
            table.source_inverse.push(s.inverse().lorentz().clone());
            table.target.push(t.lorentz().clone());
            table.target_fixed.push(fixed);
            table.words.push(w);
        }
        if table.words.is_empty() {
            return Err(Error::ElementaryRepresentation("no usable words in the orbit table".into()));
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn rule(&self) -> OrbitRule {
        self.rule
    }

    pub fn target_rep(&self) -> &Representation {
        &self.target_rep
    }

    fn select(&self, theta: &BoundaryPoint) -> usize {
        let d = theta.direction();
        let k = d.len();
        let score = |key: &DVector<f64>| match self.rule {
            // B(y, θ) = log(t - s·θ) for y = (t, s) on the hyperboloid
            OrbitRule::Shadow => key[0] - key.rows(1, k).dot(d),
            OrbitRule::FixedPoints => (key.rows(1, k) - d).norm_squared(),
        };
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for (i, key) in self.keys.iter().enumerate() {
            let s = score(key);
            if s < best_score {
                best_score = s;
                best = i;
            }
        }
        best
    }

    pub fn apply(&self, theta: &BoundaryPoint) -> Result<BoundaryPoint> {
        let i = self.select(theta);
        match self.rule {
            OrbitRule::Shadow => {
                let v = &self.source_inverse[i] * theta.to_null();
                let back = BoundaryPoint::from_null(&v)?;
                BoundaryPoint::from_null(&(&self.target[i] * back.to_null()))
            }
            OrbitRule::FixedPoints => Ok(self.target_fixed[i].clone().expect("filtered at build")),
        }
    }
}

/// A boundary map `∂H^k → ∂H^m`.
#[derive(Clone, Debug)]
pub enum BoundaryMap {
    /// Boundary action of an isometry (k = m); the identity is `Mobius(id)`.
    Mobius(Isometry),
    /// `θ ↦ g·ι(θ)` with `ι` the equatorial inclusion `∂H^k ⊂ ∂H^m`.
    TotallyGeodesic { source_dim: usize, g: Isometry },
    /// Approximation from an orbit table; equivariance is only approximate.
    OrbitApproximation(Box<OrbitTable>),
}

impl BoundaryMap {
    pub fn identity(k: usize) -> Self {
        Self::Mobius(Isometry::identity(k))
    }

    pub fn source_dim(&self) -> usize {
        match self {
            Self::Mobius(g) => g.dim(),
            Self::TotallyGeodesic { source_dim, .. } => *source_dim,
            Self::OrbitApproximation(t) => t.target_rep.target_dim(),
        }
    }

    pub fn target_dim(&self) -> usize {
        match self {
            Self::Mobius(g) => g.dim(),
            Self::TotallyGeodesic { g, .. } => g.dim(),
            Self::OrbitApproximation(t) => t.target_rep.target_dim(),
        }
    }

    /// True for the orbit-table surrogate, whose outputs are labelled approximate.
    pub fn is_approximate(&self) -> bool {
        matches!(self, Self::OrbitApproximation(_))
    }

    pub fn apply(&self, theta: &BoundaryPoint) -> Result<BoundaryPoint> {
        if theta.dim() != self.source_dim() {
            return Err(Error::DimensionMismatch { expected: self.source_dim(), found: theta.dim() });
        }
        match self {
            Self::Mobius(g) => g.act_boundary(theta),
            Self::TotallyGeodesic { g, .. } => g.act_boundary(&theta.embed(g.dim())),
            Self::OrbitApproximation(t) => t.apply(theta),
        }
    }
}

/// Largest angle between `D(i(γ)θ)` and `ρ(γ)D(θ)` over generators and sample points.
pub fn equivariance_defect(
    d: &BoundaryMap,
    source: &Representation,
    target: &Representation,
    samples: &[BoundaryPoint],
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (g, h) in source.generators.iter().zip(&target.generators) {
        for theta in samples {
            let lhs = d.apply(&g.act_boundary(theta)?)?;
            let rhs = h.act_boundary(&d.apply(theta)?)?;
            worst = worst.max(lhs.angle_to(&rhs));
        }
    }
    Ok(worst)
}

/// Second-order forms of the natural map at a point, in orthonormal frames.
#[derive(Clone, Debug)]
pub struct OperatorPair {
    pub x: HPoint,
    pub image: HPoint,
    /// `⟨Hu, u⟩ = ∫ dB(F(x), D(θ))(u)² dμ_x` on `T_{F(x)}H^m`.
    pub h: DMatrix<f64>,
    /// `∫ ∇dB(F(x), D(θ)) dμ_x`.
    pub k_form: DMatrix<f64>,
    /// `⟨H'v, v⟩ = ∫ dB(x, θ)(v)² dμ_x` on `T_xH^k`.
    pub h_prime: DMatrix<f64>,
    /// `⟨L(v), u⟩ = ∫ dB(F(x), D(θ))(u) dB(x, θ)(v) dμ_x`.
    pub l: DMatrix<f64>,
    /// Norm of `∫ dB(F(x), D(θ)) dμ_x`.
    pub stationarity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMethod {
    FiniteDifference,
    Implicit,
}

#[derive(Clone, Debug)]
pub struct JacobianResult {
    /// `m×k` matrix of `D_xF` in orthonormal frames.
    pub df: DMatrix<f64>,
    /// Product of the singular values of `df`.
    pub jac: f64,
    pub method: JacobianMethod,
    /// Set when the implicit method was requested but `K` was ill conditioned.
    pub fell_back: bool,
}

/// The natural map of a boundary map, with the images of the quadrature
/// nodes cached.
#[derive(Clone, Debug)]
pub struct NaturalMap {
    family: VisualFamily,
    images: Vec<BoundaryPoint>,
    target_dim: usize,
    approximate: bool,
    cfg: SolverConfig,
    fd_step: f64,
}

impl NaturalMap {
    pub fn new(d: &BoundaryMap, family: VisualFamily, cfg: SolverConfig) -> Result<Self> {
        if d.source_dim() != family.dim() {
            return Err(Error::DimensionMismatch { expected: family.dim(), found: d.source_dim() });
        }
        if let BoundaryMap::OrbitApproximation(t) = d {
            if is_elementary(&t.target_rep) {
                return Err(Error::ElementaryRepresentation(
                    "generators share a fixed point or an invariant axis".into(),
                ));
            }
        }
        let images = family.rule().points.iter().map(|p| d.apply(p)).collect::<Result<Vec<_>>>()?;
        Ok(Self { family, images, target_dim: d.target_dim(), approximate: d.is_approximate(), cfg, fd_step: FD_STEP })
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn source_dim(&self) -> usize {
        self.family.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    pub fn family(&self) -> &VisualFamily {
        &self.family
    }

    /// `β_x = D_* μ_x`.
    pub fn pushed_measure(&self, x: &HPoint) -> Result<BoundaryMeasure> {
        let w = self.family.weights_at(x)?;
        Ok(BoundaryMeasure::from_nodes_unchecked(w.into_iter().zip(self.images.iter().cloned()).collect()))
    }

    pub fn eval(&self, x: &HPoint) -> Result<HPoint> {
        let beta = self.pushed_measure(x)?;
        let (m, _) = max_atom_mass(&beta);
        if m >= 0.5 {
            return Err(Error::ElementaryRepresentation(format!("pushed measure has an atom of mass {m}")));
        }
        match barycenter(&beta, &self.cfg)?.location {
            BarycenterLocation::Interior(p) => Ok(p),
            BarycenterLocation::BoundaryAtom(_) => unreachable!("atoms checked above"),
        }
    }

    fn eval_near(&self, x: &HPoint, guess: &HPoint) -> Result<HPoint> {
        let beta = self.pushed_measure(x)?;
        match barycenter_from(&beta, &self.cfg, guess.clone())?.location {
            BarycenterLocation::Interior(p) => Ok(p),
            BarycenterLocation::BoundaryAtom(_) => {
                Err(Error::ElementaryRepresentation("pushed measure has a dominant atom".into()))
            }
        }
    }

    /// Assembles `H`, `K`, `H'` and `L` at `x` (and `F(x)`).
    pub fn operators_at(&self, x: &HPoint) -> Result<OperatorPair> {
        let fx = self.eval(x)?;
        self.operators_with_image(x, fx)
    }

    pub fn operators_with_image(&self, x: &HPoint, fx: HPoint) -> Result<OperatorPair> {
        let k = self.source_dim();
        let m = self.target_dim;
        let w = self.family.weights_at(x)?;
        let nx = x.coords().norm();
        let ax = (1.0 - nx) * (1.0 + nx);
        let ny = fx.coords().norm();
        let ay = (1.0 - ny) * (1.0 + ny);
        let mut h = DMatrix::zeros(m, m);
        let mut kf = DMatrix::zeros(m, m);
        let mut hp = DMatrix::zeros(k, k);
        let mut l = DMatrix::zeros(m, k);
        let mut g = DVector::zeros(m);
        let id = DMatrix::<f64>::identity(m, m);
        for ((wi, theta), img) in w.iter().zip(&self.family.rule().points).zip(&self.images) {
            let u = busemann_unit_frame(fx.coords(), ay, img.direction());
            let v = busemann_unit_frame(x.coords(), ax, theta.direction());
            h.ger(*wi, &u, &u, 1.0);
            kf += (&id - &u * u.transpose()) * *wi;
            hp.ger(*wi, &v, &v, 1.0);
            l.ger(*wi, &u, &v, 1.0);
            g.axpy(*wi, &u, 1.0);
        }
        Ok(OperatorPair { x: x.clone(), image: fx, h, k_form: kf, h_prime: hp, l, stationarity: g.norm() })
    }

    /// `D_xF` by the differentiated barycenter equation `K DF = (k-1) L`,
    /// falling back to finite differences when `K` is ill conditioned.
    pub fn jacobian(&self, x: &HPoint, method: JacobianMethod) -> Result<JacobianResult> {
        match method {
            JacobianMethod::FiniteDifference => self.jacobian_fd(x),
            JacobianMethod::Implicit => {
                let ops = self.operators_at(x)?;
                match implicit_derivative(&ops, self.source_dim()) {
                    Ok(df) => Ok(JacobianResult { jac: jac_k(&df), df, method, fell_back: false }),
                    Err(Error::IllConditionedK(_)) => {
                        let mut r = self.jacobian_fd(x)?;
                        r.fell_back = true;
                        Ok(r)
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }

    fn jacobian_fd(&self, x: &HPoint) -> Result<JacobianResult> {
        let k = self.source_dim();
        let fx = self.eval(x)?;
        let h = self.fd_step;
        let mut df = DMatrix::zeros(self.target_dim, k);
        for j in 0..k {
            let mut e = DVector::zeros(k);
            e[j] = h;
            let step = TangentVector::from_frame(x.clone(), e)?;
            let xp = exp_map(x, &step)?;
            let xm = exp_map(x, &step.scale(-1.0))?;
            let fp = log_map(&fx, &self.eval_near(&xp, &fx)?)?.frame_coords();
            let fm = log_map(&fx, &self.eval_near(&xm, &fx)?)?.frame_coords();
            df.set_column(j, &((fp - fm) / (2.0 * h)));
        }
        Ok(JacobianResult { jac: jac_k(&df), df, method: JacobianMethod::FiniteDifference, fell_back: false })
    }
}

/// Solves `K DF = (k-1) L`.
pub fn implicit_derivative(ops: &OperatorPair, k: usize) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(ops.k_form.clone());
    let min = eig.eigenvalues.min();
    if min < K_MIN_EIGENVALUE {
        return Err(Error::IllConditionedK(min));
    }
    let inv = eig.eigenvalues.map(|l| 1.0 / l);
    let kinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    Ok(kinv * &ops.l * (k as f64 - 1.0))
}

/// `k`-Jacobian: product of the singular values of an `m×k` matrix (`m ≥ k`).
pub fn jac_k(df: &DMatrix<f64>) -> f64 {
    df.clone().svd(false, false).singular_values.iter().product()
}

/// Operator norm (largest singular value).
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.max()
}

/// `F(x)` for a representation and boundary map (convenience wrapper that
/// rebuilds the node images).
pub fn natural_map(
    rho: &Representation,
    d: &BoundaryMap,
    family: &VisualFamily,
    x: &HPoint,
    cfg: &SolverConfig,
) -> Result<HPoint> {
    if d.target_dim() != rho.target_dim() {
        return Err(Error::DimensionMismatch { expected: rho.target_dim(), found: d.target_dim() });
    }
    NaturalMap::new(d, family.clone(), cfg.clone())?.eval(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianBoundReport {
    pub k: usize,
    pub m: usize,
    pub measured: f64,
    /// `(k-1)^k / k^{k/2} · det(H^V)^{1/2} / det(I - H^V)` on `V = range(DF)`.
    pub bound: f64,
    /// k = m: `(k-1)^k / k^{k/2} · ψ(H)^{1/2}` with `ψ(H) = det H / det(I-H)²`.
    pub psi_form: Option<f64>,
    /// k = m: the bound written with the assembled `K` instead of `I - H`.
    pub k_form_bound: Option<f64>,
    /// `|H^V - I/k|_F`.
    pub restricted_h_deviation: f64,
    pub pass: bool,
}

/// Compares the measured Jacobian with the Cauchy–Schwarz bound.
pub fn jacobian_bound_check(ops: &OperatorPair, df: &DMatrix<f64>, tol: f64) -> Result<JacobianBoundReport> {
    let m = df.nrows();
    let k = df.ncols();
    if ops.h.nrows() != m || k > m {
        return Err(Error::DimensionMismatch { expected: ops.h.nrows(), found: m });
    }
    let kf = k as f64;
    let c = (kf - 1.0).powi(k as i32) / kf.powf(kf / 2.0);
    let measured = jac_k(df);
    let q = df.clone().qr().q();
    let hv = q.transpose() * &ops.h * &q;
    let id = DMatrix::<f64>::identity(k, k);
    let bound = c * hv.determinant().max(0.0).sqrt() / (&id - &hv).determinant();
    let restricted_h_deviation = (&hv - &id / kf).norm();
    let (psi_form, k_form_bound) = if k == m {
        let dk = (&id - &ops.h).determinant();
        let psi = ops.h.determinant() / (dk * dk);
        (Some(c * psi.max(0.0).sqrt()), Some(c * ops.h.determinant().max(0.0).sqrt() / ops.k_form.determinant()))
    } else {
        (None, None)
    };
    Ok(JacobianBoundReport { k, m, measured, bound, psi_form, k_form_bound, restricted_h_deviation, pass: measured <= bound + tol })
}

/// Convergence and accuracy estimate: `d(F_N(x), F_{4N}(x))`.
pub fn quadrature_error_estimate(coarse: &NaturalMap, fine: &NaturalMap, x: &HPoint) -> Result<f64> {
    distance(&coarse.eval(x)?, &fine.eval(x)?)
}

/// One row of the diagnostic table along a family of representations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub parameter: f64,
    pub probe: usize,
    pub jac: f64,
    pub h_dev: f64,
    /// Largest `|λ_i(H) - 1/m|`.
    pub h_eig_dev: f64,
    pub df_norm: f64,
    pub lipschitz: f64,
    pub translation_lengths: Vec<f64>,
    pub volume: f64,
    pub volume_deficit: f64,
    pub approximate: bool,
}

/// A member of the family analysed by [`convergence_diagnostics`].
pub struct DiagnosticInput<'a> {
    pub parameter: f64,
    pub rho: &'a Representation,
    pub map: &'a NaturalMap,
    pub volume: f64,
}

/// Per parameter and probe point: `|H - I/m|_F`, Jac, `|DF|`, the empirical
/// Lipschitz ratio over probe pairs and the generators' translation lengths,
/// tabulated against the volume deficit `reference_volume - volume`.
pub fn convergence_diagnostics(
    inputs: &[DiagnosticInput<'_>],
    probes: &[HPoint],
    reference_volume: f64,
    method: JacobianMethod,
) -> Result<Vec<DiagnosticRow>> {
    let mut rows = Vec::new();
    for inp in inputs {
        let images = probes.iter().map(|p| inp.map.eval(p)).collect::<Result<Vec<_>>>()?;
        let mut lip = 0.0_f64;
        for i in 0..probes.len() {
            for j in i + 1..probes.len() {
                let d0 = distance(&probes[i], &probes[j])?;
                if d0 > 0.0 {
                    lip = lip.max(distance(&images[i], &images[j])? / d0);
                }
            }
        }
        let lengths = inp.rho.generator_lengths();
        for (idx, (p, fx)) in probes.iter().zip(images).enumerate() {
            let ops = inp.map.operators_with_image(p, fx)?;
            let m = ops.h.nrows();
            let iso = DMatrix::<f64>::identity(m, m) / m as f64;
            let h_dev = (&ops.h - &iso).norm();
            let h_eig_dev = SymmetricEigen::new(ops.h.clone())
                .eigenvalues
                .iter()
                .map(|l| (l - 1.0 / m as f64).abs())
                .fold(0.0, f64::max);
            let df = match method {
                JacobianMethod::Implicit => match implicit_derivative(&ops, inp.map.source_dim()) {
                    Ok(df) => df,
                    Err(Error::IllConditionedK(_)) => inp.map.jacobian(p, JacobianMethod::FiniteDifference)?.df,
                    Err(e) => return Err(e),
                },
                JacobianMethod::FiniteDifference => inp.map.jacobian(p, method)?.df,
            };
            rows.push(DiagnosticRow {
                parameter: inp.parameter,
                probe: idx,
                jac: jac_k(&df),
                h_dev,
                h_eig_dev,
                df_norm: operator_norm(&df),
                lipschitz: lip,
                translation_lengths: lengths.clone(),
                volume: inp.volume,
                volume_deficit: reference_volume - inp.volume,
                approximate: inp.map.is_approximate(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{random_direction, random_point};
    use crate::quadrature::QuadratureRule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(51)
    }

    /// Free group on two loxodromics with distinct axes.
    fn schottky() -> Representation {
        let a = Isometry::translation(&BoundaryPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap(), 1.5);
        let b = Isometry::translation(&BoundaryPoint::from_slice(&[0.0, 1.0, 0.0]).unwrap(), 1.5);
        Representation::new(vec![a, b], vec![], 3).unwrap()
    }

    #[test]
    fn words_parse_reduce_and_enumerate() {
        let w: Word = "aBbA".parse().unwrap();
        assert_eq!(w.reduced(), Word::identity());
        assert_eq!("abAB".parse::<Word>().unwrap().to_string(), "abAB");
        assert_eq!(Word::enumerate(2, 8).len(), 13120);
        let ws = Word::enumerate(2, 3);
        assert!(ws.iter().all(|w| w.reduced() == *w));
        assert!("a1".parse::<Word>().is_err());
    }

    #[test]
    fn elementarity() {
        assert!(!is_elementary(&schottky()));
        let ax = BoundaryPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        let a = Isometry::translation(&ax, 1.0);
        let b = Isometry::translation(&ax, 0.3);
        assert!(is_elementary(&Representation::new(vec![a, b], vec![], 3).unwrap()));
    }

    #[test]
    fn identity_map_fixes_points() {
        let fam = VisualFamily::with_nodes(3, 2000).unwrap();
        let nm = NaturalMap::new(&BoundaryMap::identity(3), fam, SolverConfig::default()).unwrap();
        let mut r = rng();
        for _ in 0..5 {
            let x = random_point(3, 1.0, &mut r);
            let fx = nm.eval(&x).unwrap();
            assert!(distance(&x, &fx).unwrap() < 5e-4);
        }
        let ops = nm.operators_at(&HPoint::origin(3)).unwrap();
        assert!((&ops.h - DMatrix::identity(3, 3) / 3.0).norm() < 1e-3);
        assert!((ops.h.trace() - 1.0).abs() < 1e-12);
        assert!((ops.h_prime.trace() - 1.0).abs() < 1e-12);
        assert!((&ops.k_form - (DMatrix::identity(3, 3) - &ops.h)).norm() < 1e-12);
        assert!(ops.stationarity < 1e-9);
    }

    #[test]
    fn mobius_map_gives_the_isometry() {
        let mut r = rng();
        let g = Isometry::random(3, 1.0, &mut r);
        let fam = VisualFamily::with_nodes(3, 2000).unwrap();
        let nm = NaturalMap::new(&BoundaryMap::Mobius(g.clone()), fam, SolverConfig::default()).unwrap();
        for _ in 0..3 {
            let x = random_point(3, 1.0, &mut r);
            assert!(distance(&nm.eval(&x).unwrap(), &g.act(&x).unwrap()).unwrap() < 5e-4);
        }
    }

    #[test]
    fn jacobian_methods_agree_and_respect_bound() {
        let mut r = rng();
        let fam = VisualFamily::new(3, QuadratureRule::GaussProduct, 800).unwrap();
        let g = Isometry::random(3, 0.5, &mut r);
        let nm = NaturalMap::new(&BoundaryMap::Mobius(g), fam, SolverConfig::default()).unwrap();
        let x = random_point(3, 1.0, &mut r);
        let a = nm.jacobian(&x, JacobianMethod::FiniteDifference).unwrap();
        let b = nm.jacobian(&x, JacobianMethod::Implicit).unwrap();
        assert!(operator_norm(&(&a.df - &b.df)) < 1e-3);
        let ops = nm.operators_at(&x).unwrap();
        let rep = jacobian_bound_check(&ops, &b.df, 1e-3).unwrap();
        assert!(rep.pass);
        assert!((rep.bound - rep.k_form_bound.unwrap()).abs() < 1e-8);
        assert!((rep.bound - rep.psi_form.unwrap()).abs() < 1e-8);
    }

    #[test]
    fn orbit_table_is_exact_for_equal_representations() {
        let s = schottky();
        let table = OrbitTable::build(&s, &s, 4, OrbitRule::Shadow).unwrap();
        let d = BoundaryMap::OrbitApproximation(Box::new(table));
        let mut r = rng();
        for _ in 0..20 {
            let t = random_direction(3, &mut r);
            assert!(d.apply(&t).unwrap().angle_to(&t) < 1e-9);
        }
        let samples: Vec<BoundaryPoint> = (0..20).map(|_| random_direction(3, &mut r)).collect();
        assert!(equivariance_defect(&d, &s, &s, &samples).unwrap() < 1e-9);
        let fp = OrbitTable::build(&s, &s, 3, OrbitRule::FixedPoints).unwrap();
        assert!(fp.len() > 10);
    }

    #[test]
    fn mobius_map_is_equivariant_for_conjugate() {
        let mut r = rng();
        let s = schottky();
        let h = Isometry::random(3, 1.0, &mut r);
        let c = s.conjugate(&h);
        let samples: Vec<BoundaryPoint> = (0..20).map(|_| random_direction(3, &mut r)).collect();
        assert!(equivariance_defect(&BoundaryMap::Mobius(h), &s, &c, &samples).unwrap() < 1e-10);
    }

    #[test]
    fn constant_boundary_map_is_rejected() {
        let fam = VisualFamily::with_nodes(3, 200).unwrap();
        // a degenerate boundary map: collapse everything through an extreme boost
        let pole = BoundaryPoint::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let g = Isometry::translation(&pole, 30.0);
        let nm = NaturalMap::new(&BoundaryMap::Mobius(g), fam, SolverConfig::default()).unwrap();
        assert!(matches!(nm.eval(&HPoint::origin(3)), Err(Error::ElementaryRepresentation(_))));
    }
}
