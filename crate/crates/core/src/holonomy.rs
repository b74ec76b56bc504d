//! Developing map of a shaped ideal triangulation and the holonomy
//! representation of its fundamental group.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::dilog::{bloch_wigner_with_error, cross_ratio};
use crate::error::{Error, Result};
use crate::natural::{Representation, Word};
use crate::spin::{boundary_to_complex, mobius_from_three_points, sl2_to_isometry, spinor, Sl2, Spinor};
use crate::triangulation::{complete_structure, IdealTriangulation, ShapeVector, DEGENERATE_TOL};
use crate::hyperbolic::BoundaryPoint;

/// Vertices of a tetrahedron with shape `z` in standard position `(∞, 0, 1, z)`.
fn standard_vertices(z: Complex64) -> [Spinor; 4] {
    [spinor(None), spinor(Some(Complex64::new(0.0, 0.0))), spinor(Some(Complex64::new(1.0, 0.0))), spinor(Some(z))]
}

fn unit(s: Spinor) -> Spinor {
    s / Complex64::new(s.norm(), 0.0)
}

/// Projective distance between two points of `CP¹`.
fn chordal(a: &Spinor, b: &Spinor) -> f64 {
    let det = a[0] * b[1] - a[1] * b[0];
    det.norm() / (a.norm() * b.norm())
}

/// Places the tetrahedron with shape `z` so that the vertices listed in
/// `known` land on the given points, and returns all four vertices.
fn place(z: Complex64, known: [(usize, Spinor); 3]) -> Result<[Spinor; 4]> {
    let std = standard_vertices(z);
    let m = mobius_from_three_points(&[std[known[0].0], std[known[1].0], std[known[2].0]], &[
        known[0].1, known[1].1, known[2].1,
    ])?;
    Ok(std.map(|v| unit(m * v)))
}

/// Group presentation read off the triangulation, after Tietze reduction.
#[derive(Clone, Debug)]
pub struct Presentation {
    /// Faces `(tet, face)` whose pairings survive the reduction.
    pub face_pairings: Vec<(usize, usize)>,
    /// Each generator as a word in those face pairings.
    pub generator_words: Vec<Word>,
    pub relators: Vec<Word>,
}

#[derive(Clone, Debug)]
pub struct Holonomy {
    pub presentation: Presentation,
    pub sl2: Vec<Sl2>,
    pub representation: Representation,
    /// Developed ideal vertices of each tetrahedron.
    pub vertices: Vec<[Spinor; 4]>,
}

impl Holonomy {
    /// `Σ D(cross-ratio of the developed vertices)`.
    pub fn straight_volume(&self) -> Result<f64> {
        let mut v = 0.0;
        for (i, tet) in self.vertices.iter().enumerate() {
            let z = cross_ratio(tet);
            v += bloch_wigner_with_error(z)
                .map_err(|_| Error::PoleInput { index: i, value: format!("{z}") })?
                .value;
        }
        Ok(v)
    }

    /// Largest entry of `A ∓ I` over relators evaluated in `SL(2, C)`, with
    /// the better sign (relators hold in `PSL(2, C)`).
    pub fn relator_residual_sl2(&self) -> f64 {
        self.presentation
            .relators
            .iter()
            .map(|r| {
                let a = eval_sl2(&self.sl2, r);
                let id = Sl2::identity();
                let plus = (a - id).iter().map(|x| x.norm()).fold(0.0, f64::max);
                let minus = (a + id).iter().map(|x| x.norm()).fold(0.0, f64::max);
                plus.min(minus)
            })
            .fold(0.0, f64::max)
    }

    /// Developed ideal vertices as points of the ball-model sphere.
    pub fn boundary_vertices(&self) -> Vec<[BoundaryPoint; 4]> {
        self.vertices
            .iter()
            .map(|t| t.map(|s| crate::spin::boundary_from_complex(crate::spin::spinor_value(&s))))
            .collect()
    }
}

/// Vertices `0, 1, 2` of a regular ideal tetrahedron centred at the origin of
/// the ball, ordered so that the fourth vertex has shape `e^{iπ/3}`.
pub fn default_placement() -> [Spinor; 3] {
    let s = 1.0 / 3f64.sqrt();
    let pts = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
        .map(|p| BoundaryPoint::from_slice(&p).expect("unit"))
        .map(|b| spinor(boundary_to_complex(&b)));
    if cross_ratio(&pts).im > 0.0 {
        [pts[0], pts[1], pts[2]]
    } else {
        [pts[0], pts[2], pts[1]]
    }
}

/// Holonomy with the root tetrahedron 0 placed by [`default_placement`].
pub fn holonomy_from_shapes(tri: &IdealTriangulation, z: &ShapeVector) -> Result<Holonomy> {
    holonomy_with_base(tri, z, 0, default_placement())
}

/// Develops the triangulation from tetrahedron `root`, whose vertices `0, 1, 2`
/// are placed at `placement`, and reads off the face-pairing holonomy.
/// Generators are the non-tree face pairings `(tet, face)` taken in the
/// direction of the lexicographically smaller side, so the labelling does not
/// depend on the root when the spanning tree does not.
///
/// For two-generator groups whose complete structure exists, the generators
/// are replaced by a Nielsen-equivalent pair that is parabolic at the complete
/// structure (a pair of meridians); the choice is made once per triangulation,
/// so it is the same for every shape vector.
pub fn holonomy_with_base(
    tri: &IdealTriangulation,
    z: &ShapeVector,
    root: usize,
    placement: [Spinor; 3],
) -> Result<Holonomy> {
    let raw = develop(tri, z, root, placement)?;
    let (words, relators) = match meridian_basis(tri) {
        Some(b) => (b.words, b.relators),
        None => ((1..=raw.sl2.len() as i32).map(|g| Word(vec![g])).collect(), raw.relators.clone()),
    };
    let sl2: Vec<Sl2> = words.iter().map(|w| eval_sl2(&raw.sl2, w)).collect();
    let isos = sl2.iter().map(sl2_to_isometry).collect();
    let representation = Representation::unchecked(isos, relators.clone(), 3)?;
    Ok(Holonomy {
        presentation: Presentation { face_pairings: raw.face_pairings, generator_words: words, relators },
        sl2,
        representation,
        vertices: raw.vertices,
    })
}

struct RawHolonomy {
    face_pairings: Vec<(usize, usize)>,
    sl2: Vec<Sl2>,
    relators: Vec<Word>,
    vertices: Vec<[Spinor; 4]>,
}

fn inverse_sl2(a: &Sl2) -> Sl2 {
    Sl2::new(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)])
}

fn eval_sl2(gens: &[Sl2], w: &Word) -> Sl2 {
    w.0.iter().fold(Sl2::identity(), |acc, &l| {
        let g = &gens[(l.unsigned_abs() - 1) as usize];
        if l > 0 { acc * g } else { acc * inverse_sl2(g) }
    })
}

struct MeridianBasis {
    words: Vec<Word>,
    relators: Vec<Word>,
}

/// Breadth-first search over Nielsen moves for a generating pair that is
/// parabolic at the complete structure.
fn meridian_basis(tri: &IdealTriangulation) -> Option<MeridianBasis> {
    const DEPTH: usize = 5;
    let complete = complete_structure(tri).ok()?;
    let raw = develop(tri, &complete, 0, default_placement()).ok()?;
    if raw.sl2.len() != 2 {
        return None;
    }
    let parabolic = |w: &Word| {
        let a = eval_sl2(&raw.sl2, w);
        let tr = a[(0, 0)] + a[(1, 1)];
        (tr - 2.0).norm().min((tr + 2.0).norm()) <= 1e-9
    };
    // state: generators in terms of face pairings, and face pairings in terms of generators
    let start = ([Word(vec![1]), Word(vec![2])], [Word(vec![1]), Word(vec![2])]);
    let mut seen = std::collections::HashSet::new();
    seen.insert(start.0.clone());
    let mut layer = vec![start];
    for _ in 0..=DEPTH {
        for (fwd, bwd) in &layer {
            if fwd.iter().all(parabolic) {
                let relators = raw.relators.iter().map(|r| Word(cyclic_reduce(substitute(r, bwd).0))).filter(|r| !r.is_empty()).collect();
                return Some(MeridianBasis { words: fwd.to_vec(), relators });
            }
        }
        let mut next = Vec::new();
        for (fwd, bwd) in &layer {
            for i in 0..2 {
                let j = 1 - i;
                for e in [1i32, -1] {
                    for right in [true, false] {
                        // g_i ← g_i g_j^e or g_j^e g_i; old g_i = new g_i g_j^-e (resp. g_j^-e g_i)
                        let gj = Word(vec![e * (j as i32 + 1)]);
                        let mut f = fwd.clone();
                        let fj = if e > 0 { fwd[j].clone() } else { fwd[j].inverse() };
                        f[i] = if right { fwd[i].concat(&fj) } else { fj.concat(&fwd[i]) };
                        if !seen.insert(f.clone()) {
                            continue;
                        }
                        let gi = Word(vec![i as i32 + 1]);
                        let undo = if right { gi.concat(&gj.inverse()) } else { gj.inverse().concat(&gi) };
                        let mut images = [Word(vec![1]), Word(vec![2])];
                        images[i] = undo;
                        let b = [substitute(&bwd[0], &images), substitute(&bwd[1], &images)];
                        next.push((f, b));
                    }
                }
            }
        }
        layer = next;
    }
    None
}

/// Replaces letter `g` by `images[g - 1]` and freely reduces.
fn substitute(w: &Word, images: &[Word]) -> Word {
    let mut out = Vec::new();
    for &l in &w.0 {
        let img = &images[(l.unsigned_abs() - 1) as usize];
        if l > 0 {
            out.extend(img.0.iter());
        } else {
            out.extend(img.inverse().0.iter());
        }
    }
    Word(out).reduced()
}

fn develop(tri: &IdealTriangulation, z: &ShapeVector, root: usize, placement: [Spinor; 3]) -> Result<RawHolonomy> {
    let n = tri.len();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: z.len() });
    }
    if root >= n {
        return Err(Error::InvalidParameter(format!("root tetrahedron {root} out of range")));
    }
    for (i, s) in z.0.iter().enumerate() {
        if s.norm() < DEGENERATE_TOL || (s - 1.0).norm() < DEGENERATE_TOL || !s.is_finite() {
            return Err(Error::DevelopingFailure(format!("shape {i} = {s} is degenerate")));
        }
    }
    // spanning tree: the lowest-numbered gluing that reaches a new tetrahedron,
    // searched from tetrahedron 0 so the tree is independent of the root
    let mut in_tree = vec![[false; 4]; n];
    {
        let mut reached = vec![false; n];
        reached[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(t) = queue.pop_front() {
            for f in 0..4 {
                let (u, p) = tri.neighbor(t, f);
                if !reached[u] {
                    reached[u] = true;
                    in_tree[t][f] = true;
                    in_tree[u][p[f] as usize] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    let mut dev: Vec<Option<[Spinor; 4]>> = vec![None; n];
    dev[root] = Some(place(z.0[root], [(0, placement[0]), (1, placement[1]), (2, placement[2])])?);
    let mut queue = VecDeque::from([root]);
    while let Some(t) = queue.pop_front() {
        for f in 0..4 {
            if !in_tree[t][f] {
                continue;
            }
            let (u, _) = tri.neighbor(t, f);
            if dev[u].is_none() {
                dev[u] = Some(neighbor_copy(tri, z, t, f, dev[t].as_ref().unwrap())?);
                queue.push_back(u);
            }
        }
    }
    let dev: Vec<[Spinor; 4]> = dev.into_iter().map(|d| d.expect("connected")).collect();

    // generators and their Möbius images
    let mut gens: Vec<(usize, usize)> = Vec::new();
    let mut letter = vec![[0i32; 4]; n];
    let mut sl2 = Vec::new();
    for t in 0..n {
        for f in 0..4 {
            if in_tree[t][f] || letter[t][f] != 0 {
                continue;
            }
            let (u, p) = tri.neighbor(t, f);
            let g = gens.len() as i32 + 1;
            gens.push((t, f));
            letter[t][f] = g;
            letter[u][p[f] as usize] = -g;
            let copy = neighbor_copy(tri, z, t, f, &dev[t])?;
            let idx: Vec<usize> = (0..4).filter(|v| *v != p[f] as usize).collect();
            let h = mobius_from_three_points(&[dev[u][idx[0]], dev[u][idx[1]], dev[u][idx[2]]], &[
                copy[idx[0]], copy[idx[1]], copy[idx[2]],
            ])?;
            let fourth = unit(h * dev[u][p[f] as usize]);
            if chordal(&fourth, &copy[p[f] as usize]) > 1e-6 {
                return Err(Error::DevelopingFailure("face pairing does not match the fourth vertex".into()));
            }
            sl2.push(h);
        }
    }

    // one relator per edge class: the product of crossings around the edge
    let mut relators = Vec::new();
    for class in tri.edge_classes() {
        let w: Vec<i32> = class
            .iter()
            .map(|s| letter[s.tet][s.exit_face as usize])
            .filter(|l| *l != 0)
            .collect();
        relators.push(Word(w));
    }
    let (kept, relators) = tietze_reduce(gens.len(), relators);
    let face_pairings = kept.iter().map(|&g| gens[g]).collect();
    let sl2: Vec<Sl2> = kept.iter().map(|&g| sl2[g]).collect();
    Ok(RawHolonomy { face_pairings, sl2, relators, vertices: dev })
}

/// The copy of the tetrahedron across face `f` of the developed tetrahedron `t`.
fn neighbor_copy(tri: &IdealTriangulation, z: &ShapeVector, t: usize, f: usize, here: &[Spinor; 4]) -> Result<[Spinor; 4]> {
    let (u, p) = tri.neighbor(t, f);
    let shared: Vec<usize> = (0..4).filter(|v| *v != f).collect();
    let known = [
        (p[shared[0]] as usize, here[shared[0]]),
        (p[shared[1]] as usize, here[shared[1]]),
        (p[shared[2]] as usize, here[shared[2]]),
    ];
    place(z.0[u], known)
}

fn cyclic_reduce(mut w: Vec<i32>) -> Vec<i32> {
    w = Word(w).reduced().0;
    while w.len() >= 2 && w[0] == -w[w.len() - 1] {
        w.remove(0);
        w.pop();
    }
    w
}

/// Eliminates generators that occur exactly once in some relator. Returns the
/// surviving original generator indices and the relators rewritten in them.
pub fn tietze_reduce(gens: usize, relators: Vec<Word>) -> (Vec<usize>, Vec<Word>) {
    let mut alive: Vec<bool> = vec![true; gens];
    let mut rels: Vec<Vec<i32>> = relators.into_iter().map(|r| cyclic_reduce(r.0)).filter(|r| !r.is_empty()).collect();
    loop {
        let mut choice = None;
        let mut order: Vec<usize> = (0..rels.len()).collect();
        order.sort_by_key(|&i| (rels[i].len(), i));
        'search: for &ri in &order {
            for g in (1..=gens as i32).rev() {
                let hits: Vec<usize> = rels[ri].iter().enumerate().filter(|(_, l)| l.abs() == g).map(|(i, _)| i).collect();
                if hits.len() == 1 {
                    choice = Some((ri, g, hits[0]));
                    break 'search;
                }
            }
        }
        let Some((ri, g, pos)) = choice else { break };
        let r = rels.remove(ri);
        let rotated: Vec<i32> = r[pos..].iter().chain(r[..pos].iter()).cloned().collect();
        let rest = Word(rotated[1..].to_vec());
        // r = g^e · rest = 1
        let value = if rotated[0] > 0 { rest.inverse() } else { rest };
        let inv = value.inverse();
        rels = rels
            .into_iter()
            .map(|w| {
                let mut out = Vec::new();
                for l in w {
                    if l == g {
                        out.extend(value.0.iter());
                    } else if l == -g {
                        out.extend(inv.0.iter());
                    } else {
                        out.push(l);
                    }
                }
                cyclic_reduce(out)
            })
            .filter(|w| !w.is_empty())
            .collect();
        alive[(g - 1) as usize] = false;
    }
    let kept: Vec<usize> = (0..gens).filter(|&g| alive[g]).collect();
    let relabel = |l: i32| {
        let idx = kept.iter().position(|&g| g as i32 + 1 == l.abs()).expect("surviving generator") as i32 + 1;
        if l > 0 { idx } else { -idx }
    };
    let mut out: Vec<Word> = Vec::new();
    for w in rels {
        let w = Word(w.into_iter().map(relabel).collect());
        // drop relators that are cyclic conjugates of one already kept or of its inverse
        let dup = out.iter().any(|o| same_cyclic(o, &w) || same_cyclic(o, &w.inverse()));
        if !dup {
            out.push(w);
        }
    }
    (kept, out)
}

fn same_cyclic(a: &Word, b: &Word) -> bool {
    a.len() == b.len() && (0..a.len()).any(|s| a.0[s..].iter().chain(a.0[..s].iter()).eq(b.0.iter()))
}
