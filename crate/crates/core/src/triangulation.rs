//! Ideal triangulations of cusped 3-manifolds, shape parameters and Thurston's
//! gluing equations.
//!
//! Gluings follow the usual convention: face `f` of tetrahedron `t` (the face
//! opposite vertex `f`) is glued to tetrahedron `neighbors[f]` by the vertex
//! permutation `gluings[f]`, which sends face `f` to face `gluings[f][f]`.
//! Shapes: `z` sits on edges 01 and 23, `1/(1-z)` on 02 and 13, `1 - 1/z` on
//! 03 and 12.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Perm = [u8; 4];

/// Shapes within this distance of `{0, 1}` (or beyond its inverse) are degenerate.
pub const DEGENERATE_TOL: f64 = 1e-10;
/// `|Im log|` closer than this to `π` makes the branch ambiguous.
pub const BRANCH_TOL: f64 = 1e-6;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// `e^{iπ/3}`, the regular ideal tetrahedron.
pub fn regular_shape() -> Complex64 {
    Complex64::from_polar(1.0, PI / 3.0)
}

/// Complex shape parameters, one per tetrahedron.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeVector(pub Vec<Complex64>);

impl ShapeVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Minimal distance of any shape to the degeneration set `{0, 1, ∞}`
    /// (distance to `∞` measured as `1/|z|`).
    pub fn degeneration_distance(&self) -> f64 {
        self.0.iter().map(|z| z.norm().min((z - ONE).norm()).min(1.0 / z.norm())).fold(f64::INFINITY, f64::min)
    }

    pub fn is_geometric(&self) -> bool {
        self.0.iter().all(|z| z.im > 0.0)
    }

    /// Euclidean distance in `C^T`.
    pub fn distance(&self, other: &ShapeVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|z| z.conj()).collect())
    }
}

/// Slot `0 ↦ z`, `1 ↦ 1/(1-z)`, `2 ↦ 1 - 1/z`.
pub fn slot_value(z: Complex64, slot: u8) -> Complex64 {
    match slot {
        0 => z,
        1 => ONE / (ONE - z),
        _ => ONE - ONE / z,
    }
}

/// `d/dz log(slot_value(z, slot))`.
fn slot_log_derivative(z: Complex64, slot: u8) -> Complex64 {
    match slot {
        0 => ONE / z,
        1 => ONE / (ONE - z),
        _ => ONE / (z * (z - ONE)),
    }
}

/// Slot carried by the edge joining vertices `a` and `b`.
pub fn edge_slot(a: u8, b: u8) -> u8 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    match (lo, hi) {
        (0, 1) | (2, 3) => 0,
        (0, 2) | (1, 3) => 1,
        _ => 2,
    }
}

/// One occurrence of a tetrahedron edge in an edge class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSlot {
    pub tet: usize,
    pub edge: (u8, u8),
    pub slot: u8,
    /// Face crossed when leaving this tetrahedron while walking around the edge.
    pub exit_face: u8,
}

/// Corner of a vertex-link triangle: tetrahedron, ideal vertex, and the other
/// vertex whose edge the corner sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct LinkEdge {
    tet: usize,
    vertex: u8,
    face: u8,
}

#[derive(Clone, Debug)]
pub struct Cusp {
    /// Vertex-link triangles `(tet, vertex)` in this cusp.
    pub triangles: Vec<(usize, u8)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TetrahedronFile {
    neighbors: [usize; 4],
    gluings: [String; 4],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TriangulationFile {
    name: String,
    tetrahedra: Vec<TetrahedronFile>,
}

#[derive(Clone, Debug)]
pub struct IdealTriangulation {
    name: String,
    neighbors: Vec<[usize; 4]>,
    gluings: Vec<[Perm; 4]>,
    edges: Vec<Vec<EdgeSlot>>,
    cusps: Vec<Cusp>,
}

pub fn parse_perm(s: &str) -> Result<Perm> {
    let b = s.as_bytes();
    if b.len() != 4 || !b.iter().all(|c| (b'0'..=b'3').contains(c)) {
        return Err(Error::InvalidTriangulation(format!("bad permutation {s:?}")));
    }
    let p = [b[0] - b'0', b[1] - b'0', b[2] - b'0', b[3] - b'0'];
    let mut seen = [false; 4];
    for &x in &p {
        seen[x as usize] = true;
    }
    if seen.contains(&false) {
        return Err(Error::InvalidTriangulation(format!("{s:?} is not a permutation")));
    }
    Ok(p)
}

fn perm_string(p: &Perm) -> String {
    p.iter().map(|x| (b'0' + x) as char).collect()
}

fn inverse_perm(p: &Perm) -> Perm {
    let mut q = [0u8; 4];
    for i in 0..4 {
        q[p[i] as usize] = i as u8;
    }
    q
}

pub fn perm_is_even(p: &[u8; 4]) -> bool {
    let mut inversions = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

impl IdealTriangulation {
    /// Validates the gluing data (involutive, orientation-compatible, one
    /// edge class per tetrahedron) and computes edge classes and cusps.
    pub fn new(name: &str, neighbors: Vec<[usize; 4]>, gluings: Vec<[Perm; 4]>) -> Result<Self> {
        let n = neighbors.len();
        if n == 0 || gluings.len() != n {
            return Err(Error::InvalidTriangulation("tetrahedron count mismatch".into()));
        }
        for t in 0..n {
            for f in 0..4 {
                let (u, p) = (neighbors[t][f], gluings[t][f]);
                if u >= n {
                    return Err(Error::InvalidTriangulation(format!("tetrahedron {t} face {f}: no tetrahedron {u}")));
                }
                // an orientation-compatible gluing reverses the induced face orientation
                if perm_is_even(&p) {
                    return Err(Error::InvalidTriangulation(format!(
                        "tetrahedron {t} face {f}: gluing {} does not respect orientation",
                        perm_string(&p)
                    )));
                }
                let g = p[f] as usize;
                if neighbors[u][g] != t || gluings[u][g] != inverse_perm(&p) {
                    return Err(Error::InvalidTriangulation(format!("tetrahedron {t} face {f}: gluing is not symmetric")));
                }
                if u == t && g == f {
                    return Err(Error::InvalidTriangulation(format!("tetrahedron {t} face {f} glued to itself")));
                }
            }
        }
        let mut tri = Self { name: name.to_string(), neighbors, gluings, edges: Vec::new(), cusps: Vec::new() };
        tri.edges = tri.walk_edges();
        if tri.edges.len() != n {
            return Err(Error::InvalidTriangulation(format!(
                "{} edge classes for {} tetrahedra; vertex links are not tori",
                tri.edges.len(),
                n
            )));
        }
        tri.cusps = tri.find_cusps();
        Ok(tri)
    }

    /// The figure-eight knot complement (two regular ideal tetrahedra).
    pub fn figure_eight() -> Self {
        let p = |s: &str| parse_perm(s).expect("valid");
        Self::new(
            "figure-eight",
            vec![[1, 1, 1, 1], [0, 0, 0, 0]],
            vec![
                [p("0213"), p("2103"), p("1230"), p("1302")],
                [p("0213"), p("2103"), p("2031"), p("3012")],
            ],
        )
        .expect("figure-eight gluing data")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: TriangulationFile = serde_json::from_str(s)?;
        let mut neighbors = Vec::new();
        let mut gluings = Vec::new();
        for t in &f.tetrahedra {
            neighbors.push(t.neighbors);
            let mut g = [[0u8; 4]; 4];
            for (i, s) in t.gluings.iter().enumerate() {
                g[i] = parse_perm(s)?;
            }
            gluings.push(g);
        }
        Self::new(&f.name, neighbors, gluings)
    }

    pub fn to_json(&self) -> String {
        let f = TriangulationFile {
            name: self.name.clone(),
            tetrahedra: (0..self.len())
                .map(|t| TetrahedronFile {
                    neighbors: self.neighbors[t],
                    gluings: self.gluings[t].map(|p| perm_string(&p)),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&f).expect("serializable")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbor(&self, tet: usize, face: usize) -> (usize, Perm) {
        (self.neighbors[tet][face], self.gluings[tet][face])
    }

    pub fn edge_classes(&self) -> &[Vec<EdgeSlot>] {
        &self.edges
    }

    pub fn cusps(&self) -> &[Cusp] {
        &self.cusps
    }

    fn walk_edges(&self) -> Vec<Vec<EdgeSlot>> {
        let n = self.len();
        let mut seen = vec![[false; 6]; n];
        let pairs: [(u8, u8); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let index = |a: u8, b: u8| pairs.iter().position(|&(x, y)| (x, y) == (a.min(b), a.max(b))).unwrap();
        let mut classes = Vec::new();
        for t0 in 0..n {
            for (e, &(a0, b0)) in pairs.iter().enumerate() {
                if seen[t0][e] {
                    continue;
                }
                let others: Vec<u8> = (0..4).filter(|v| *v != a0 && *v != b0).collect();
                let (mut t, mut a, mut b, mut exit, mut other) = (t0, a0, b0, others[0], others[1]);
                let mut class = Vec::new();
                for _ in 0..6 * n {
                    seen[t][index(a, b)] = true;
                    class.push(EdgeSlot { tet: t, edge: (a.min(b), a.max(b)), slot: edge_slot(a, b), exit_face: exit });
                    let p = self.gluings[t][exit as usize];
                    let u = self.neighbors[t][exit as usize];
                    let next = (u, p[a as usize], p[b as usize], p[other as usize], p[exit as usize]);
                    t = next.0;
                    a = next.1;
                    b = next.2;
                    exit = next.3;
                    other = next.4;
                    if t == t0 && index(a, b) == e && exit == others[0] {
                        break;
                    }
                }
                classes.push(class);
            }
        }
        classes
    }

    fn find_cusps(&self) -> Vec<Cusp> {
        let n = self.len();
        let mut label = vec![[usize::MAX; 4]; n];
        let mut cusps = Vec::new();
        for t0 in 0..n {
            for v0 in 0..4u8 {
                if label[t0][v0 as usize] != usize::MAX {
                    continue;
                }
                let id = cusps.len();
                let mut tris = Vec::new();
                let mut queue = VecDeque::from([(t0, v0)]);
                label[t0][v0 as usize] = id;
                while let Some((t, v)) = queue.pop_front() {
                    tris.push((t, v));
                    for f in (0..4u8).filter(|f| *f != v) {
                        let (u, p) = self.neighbor(t, f as usize);
                        let w = p[v as usize];
                        if label[u][w as usize] == usize::MAX {
                            label[u][w as usize] = id;
                            queue.push_back((u, w));
                        }
                    }
                }
                cusps.push(Cusp { triangles: tris });
            }
        }
        cusps
    }

    /// Edge equations in logarithmic form: `Σ log(slot) - 2πi` per edge class.
    pub fn edge_residuals(&self, z: &ShapeVector) -> Result<Vec<Complex64>> {
        self.check_shapes(z)?;
        let mut out = Vec::with_capacity(self.edges.len());
        for (e, class) in self.edges.iter().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for slot in class {
                let l = slot_value(z.0[slot.tet], slot.slot).ln();
                if l.im.abs() > PI - BRANCH_TOL {
                    return Err(Error::BranchAmbiguity { equation: e, imag: l.im.abs() });
                }
                s += l;
            }
            out.push(s - TWO_PI_I);
        }
        Ok(out)
    }

    /// Jacobian of [`edge_residuals`](Self::edge_residuals) (edge classes × tetrahedra).
    pub fn edge_jacobian(&self, z: &ShapeVector) -> DMatrix<Complex64> {
        let mut j = DMatrix::zeros(self.edges.len(), self.len());
        for (e, class) in self.edges.iter().enumerate() {
            for slot in class {
                j[(e, slot.tet)] += slot_log_derivative(z.0[slot.tet], slot.slot);
            }
        }
        j
    }

    /// Logarithms of the dilation factors of the cusp holonomy along the
    /// non-tree edges of each developed vertex link. All vanish exactly when
    /// the structure is complete at every cusp (given the edge equations).
    pub fn cusp_residuals(&self, z: &ShapeVector) -> Result<Vec<Complex64>> {
        self.check_shapes(z)?;
        let mut out = Vec::new();
        for cusp in &self.cusps {
            out.extend(self.develop_link(cusp, z));
        }
        Ok(out)
    }

    fn develop_link(&self, cusp: &Cusp, z: &ShapeVector) -> Vec<Complex64> {
        // corner positions of each link triangle, indexed by vertex of the tetrahedron
        let key = |t: usize, v: u8| (t, v);
        let mut pos: std::collections::BTreeMap<(usize, u8), [Complex64; 4]> = Default::default();
        let mut tree: std::collections::BTreeSet<LinkEdge> = Default::default();
        let (t0, v0) = cusp.triangles[0];
        let others: Vec<u8> = (0..4).filter(|w| *w != v0).collect();
        let mut p0 = [Complex64::new(0.0, 0.0); 4];
        p0[others[1] as usize] = ONE;
        p0[others[2] as usize] =
            third_corner(v0, others[0], others[1], others[2], p0[others[0] as usize], ONE, z.0[t0]);
        pos.insert(key(t0, v0), p0);
        let mut queue = VecDeque::from([(t0, v0)]);
        let mut out = Vec::new();
        let mut pending: Vec<(LinkEdge, LinkEdge, [Complex64; 4])> = Vec::new();
        while let Some((t, v)) = queue.pop_front() {
            let p = pos[&key(t, v)];
            for c in (0..4u8).filter(|c| *c != v) {
                let (a, b) = {
                    let ab: Vec<u8> = (0..4).filter(|w| *w != v && *w != c).collect();
                    (ab[0], ab[1])
                };
                let (u, g) = self.neighbor(t, c as usize);
                let (gv, ga, gb, gc) = (g[v as usize], g[a as usize], g[b as usize], g[c as usize]);
                let mut q = [Complex64::new(0.0, 0.0); 4];
                q[ga as usize] = p[a as usize];
                q[gb as usize] = p[b as usize];
                q[gc as usize] = third_corner(gv, ga, gb, gc, p[a as usize], p[b as usize], z.0[u]);
                let here = LinkEdge { tet: t, vertex: v, face: c };
                let there = LinkEdge { tet: u, vertex: gv, face: gc };
                if let std::collections::btree_map::Entry::Vacant(e) = pos.entry(key(u, gv)) {
                    e.insert(q);
                    tree.insert(here);
                    tree.insert(there);
                    queue.push_back((u, gv));
                } else if here < there {
                    pending.push((here, there, q));
                }
            }
        }
        for (here, there, q) in pending {
            if tree.contains(&here) {
                continue;
            }
            let old = pos[&key(there.tet, there.vertex)];
            let ab: Vec<usize> = (0..4).filter(|w| *w != there.vertex as usize && *w != there.face as usize).collect();
            let alpha = (q[ab[1]] - q[ab[0]]) / (old[ab[1]] - old[ab[0]]);
            out.push(alpha.ln());
        }
        out
    }

    fn check_shapes(&self, z: &ShapeVector) -> Result<()> {
        if z.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: z.len() });
        }
        for (i, s) in z.0.iter().enumerate() {
            if !s.is_finite() || s.norm() == 0.0 || (s - ONE).norm() == 0.0 {
                return Err(Error::PoleInput { index: i, value: format!("{s}") });
            }
        }
        Ok(())
    }

    /// Edge and cusp residuals at `z`.
    pub fn gluing_residual(&self, z: &ShapeVector) -> Result<GluingResidual> {
        Ok(GluingResidual { edges: self.edge_residuals(z)?, cusps: self.cusp_residuals(z)? })
    }
}

/// Position of corner `c` of the vertex-link triangle at ideal vertex `v`,
/// given corners `a`, `b`. Uses `(P_c - P_a)/(P_b - P_a) = slot(v, a)` when
/// `(v, a, b, c)` is an even permutation and its inverse otherwise.
fn third_corner(v: u8, a: u8, b: u8, c: u8, pa: Complex64, pb: Complex64, z: Complex64) -> Complex64 {
    let s = slot_value(z, edge_slot(v, a));
    if perm_is_even(&[v, a, b, c]) {
        pa + s * (pb - pa)
    } else {
        pa + (pb - pa) / s
    }
}

#[derive(Clone, Debug)]
pub struct GluingResidual {
    pub edges: Vec<Complex64>,
    pub cusps: Vec<Complex64>,
}

impl GluingResidual {
    pub fn edge_max(&self) -> f64 {
        self.edges.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    pub fn cusp_max(&self) -> f64 {
        self.cusps.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Include the cusp (completeness) equations.
    pub complete: bool,
    /// Tetrahedron whose shape is held fixed.
    pub fixed: Option<usize>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 60, complete: true, fixed: None }
    }
}

fn residual_vector(tri: &IdealTriangulation, z: &ShapeVector, complete: bool) -> Result<DVector<Complex64>> {
    let mut r = tri.edge_residuals(z)?;
    if complete {
        r.extend(tri.cusp_residuals(z)?);
    }
    Ok(DVector::from_vec(r))
}

fn residual_jacobian(tri: &IdealTriangulation, z: &ShapeVector, complete: bool) -> Result<DMatrix<Complex64>> {
    let je = tri.edge_jacobian(z);
    if !complete {
        return Ok(je);
    }
    let rows = je.nrows() + tri.cusp_residuals(z)?.len();
    let mut j = DMatrix::zeros(rows, tri.len());
    j.rows_mut(0, je.nrows()).copy_from(&je);
    for t in 0..tri.len() {
        // holomorphic, so a complex central difference gives the derivative
        let h = 1e-6 * (1.0 + z.0[t].norm());
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp.0[t] += h;
        zm.0[t] -= h;
        let cp = tri.cusp_residuals(&zp)?;
        let cm = tri.cusp_residuals(&zm)?;
        for (i, (a, b)) in cp.iter().zip(&cm).enumerate() {
            j[(je.nrows() + i, t)] = (a - b) / (2.0 * h);
        }
    }
    Ok(j)
}

/// Gauss–Newton with backtracking on the (consistent, possibly overdetermined)
/// gluing system. Returns the solution and its final residual norm.
pub fn solve_gluing(tri: &IdealTriangulation, start: &ShapeVector, cfg: &NewtonConfig) -> Result<(ShapeVector, f64)> {
    let mut z = start.clone();
    let mut r = residual_vector(tri, &z, cfg.complete)?;
    let mut norm = r.norm();
    let free: Vec<usize> = (0..tri.len()).filter(|t| Some(*t) != cfg.fixed).collect();
    for _ in 0..cfg.max_iter {
        if norm <= cfg.tol {
            return Ok((z, norm));
        }
        let jfull = residual_jacobian(tri, &z, cfg.complete)?;
        let j = DMatrix::from_fn(jfull.nrows(), free.len(), |i, k| jfull[(i, free[k])]);
        let svd = j.svd(true, true);
        let step = svd
            .solve(&(-&r), 1e-12 * svd.singular_values.max())
            .map_err(|e| Error::NewtonFailure(e.to_string()))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = z.clone();
            for (k, &t) in free.iter().enumerate() {
                trial.0[t] += step[k] * lambda;
            }
            if let Ok(rt) = residual_vector(tri, &trial, cfg.complete) {
                let nt = rt.norm();
                if nt < norm || nt <= cfg.tol {
                    z = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        if z.degeneration_distance() < DEGENERATE_TOL {
            return Err(Error::NewtonFailure("shapes degenerated".into()));
        }
    }
    if norm <= cfg.tol * 10.0 {
        Ok((z, norm))
    } else {
        Err(Error::NewtonFailure(format!("residual {norm:e} after {} iterations", cfg.max_iter)))
    }
}

/// The complete hyperbolic structure, found by Newton from the regular shapes.
pub fn complete_structure(tri: &IdealTriangulation) -> Result<ShapeVector> {
    let start = ShapeVector(vec![regular_shape(); tri.len()]);
    solve_gluing(tri, &start, &NewtonConfig::default()).map(|s| s.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn figure_eight_combinatorics() {
        let t = IdealTriangulation::figure_eight();
        assert_eq!(t.len(), 2);
        assert_eq!(t.edge_classes().len(), 2);
        assert!(t.edge_classes().iter().all(|c| c.len() == 6));
        assert_eq!(t.cusps().len(), 1);
        assert_eq!(t.cusps()[0].triangles.len(), 8);
        let again = IdealTriangulation::from_json(&t.to_json()).unwrap();
        assert_eq!(again.edge_classes().len(), 2);
    }

    #[test]
    fn complete_solution_residuals() {
        let t = IdealTriangulation::figure_eight();
        let z = ShapeVector(vec![regular_shape(); 2]);
        let r = t.gluing_residual(&z).unwrap();
        assert!(r.edge_max() <= 1e-12);
        assert!(r.cusp_max() <= 1e-12);
        let w = ShapeVector(vec![regular_shape() * 1.01, regular_shape()]);
        let rw = t.gluing_residual(&w).unwrap();
        assert!(rw.edge_max() > 1e-3);
    }

    #[test]
    fn edge_equation_matches_known_polynomial() {
        // figure-eight edge equation z(z-1)(1-w) = w², the other edge is its inverse
        let t = IdealTriangulation::figure_eight();
        let z = Complex64::new(0.4, 0.9);
        let w = Complex64::new(0.3, 1.1);
        let prod: Complex64 = t.edge_classes()[0].iter().map(|s| slot_value([z, w][s.tet], s.slot)).product();
        let poly = z * (z - ONE) * (ONE - w) / (w * w);
        assert!((prod - poly).norm() < 1e-12);
        let other: Complex64 = t.edge_classes()[1].iter().map(|s| slot_value([z, w][s.tet], s.slot)).product();
        assert!((other * poly - ONE).norm() < 1e-12);
    }

    #[test]
    fn newton_recovers_complete_solution() {
        let t = IdealTriangulation::figure_eight();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let start = ShapeVector(
                (0..2).map(|_| Complex64::new(rng.random_range(0.2..0.8), rng.random_range(0.5..1.2))).collect(),
            );
            let (z, res) = solve_gluing(&t, &start, &NewtonConfig::default()).unwrap();
            assert!(res < 1e-12);
            assert!(z.distance(&ShapeVector(vec![regular_shape(); 2])) < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_gluings() {
        let p = |s: &str| parse_perm(s).unwrap();
        let even = IdealTriangulation::new(
            "x",
            vec![[1, 1, 1, 1], [0, 0, 0, 0]],
            vec![[p("0123"); 4], [p("0123"); 4]],
        );
        assert!(matches!(even, Err(Error::InvalidTriangulation(_))));
        assert!(parse_perm("0113").is_err());
        let z = ShapeVector(vec![ONE, regular_shape()]);
        assert!(matches!(IdealTriangulation::figure_eight().edge_residuals(&z), Err(Error::PoleInput { index: 0, .. })));
    }
}
