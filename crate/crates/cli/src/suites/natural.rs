//! `natural-map-suite`: the identity case (k = m), deformed configurations
//! with the orbit-table boundary map, and the totally geodesic case m > k.

use hyperrigid::barycenter::SolverConfig;
use hyperrigid::hyperbolic::{distance, random_direction, random_point, HPoint, Isometry};
use hyperrigid::natural::{
    equivariance_defect, jacobian_bound_check, operator_norm, BoundaryMap, JacobianMethod, NaturalMap, OrbitRule,
    OrbitTable, Representation,
};
use hyperrigid::volume::{deformation_path, PathDirection};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{num, Check, Outcome, Report, Table};
use crate::{ExperimentConfig, RunResult};

pub const APPROXIMATE_LABEL: &str = "approximate-D";
/// Word length of the orbit table.
pub const ORBIT_WORD_LENGTH: usize = 8;

const POSITION_TOL: f64 = 5e-4;
const OPERATOR_TOL: f64 = 1e-3;
const JACOBIAN_SLACK: f64 = 5e-3;
const DEFORMED_CONFIGS: usize = 20;

#[derive(Serialize)]
struct Params {
    k: usize,
    m: usize,
    nodes: usize,
    fine_nodes: usize,
    probes: usize,
    probe_radius: f64,
    path_steps: usize,
    seed: u64,
    tol: f64,
}

/// Natural map for the orbit-table boundary map between two representations.
pub fn orbit_map(source: &Representation, target: &Representation, nodes: usize, solver: &SolverConfig) -> hyperrigid::Result<NaturalMap> {
    let table = OrbitTable::build(source, target, ORBIT_WORD_LENGTH, OrbitRule::Shadow)?;
    let d = BoundaryMap::OrbitApproximation(Box::new(table));
    NaturalMap::new(&d, hyperrigid::measure::VisualFamily::with_nodes(source.target_dim(), nodes)?, solver.clone())
}

fn probes(k: usize, n: usize, radius: f64, seed: u64) -> Vec<HPoint> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_point(k, radius, &mut r)).collect()
}

/// Distance from a point of `H^m` to the totally geodesic `H^k` spanned by
/// the first `k` coordinates: `asinh` of the normal part on the hyperboloid.
fn distance_to_copy(p: &HPoint, k: usize) -> f64 {
    let h = p.to_hyperboloid();
    h.rows(k + 1, h.len() - k - 1).norm().asinh()
}

pub fn run(cfg: &ExperimentConfig) -> RunResult<Outcome> {
    let k = cfg.k.unwrap_or(3);
    let m = cfg.m.unwrap_or(k);
    let nodes = cfg.nodes.unwrap_or(2000);
    let p = Params {
        k,
        m,
        nodes,
        fine_nodes: 4 * nodes,
        probes: cfg.samples.unwrap_or(50),
        probe_radius: 1.0,
        path_steps: cfg.steps.unwrap_or(50),
        seed: cfg.seed.unwrap_or(11),
        tol: cfg.tol.unwrap_or(1e-10),
    };
    let solver = SolverConfig::with_tol(p.tol);
    let mut report = Report::new("natural-map-suite", &p);
    let mut tables = Vec::new();
    if m == k {
        identity_case(&p, &solver, &mut report, &mut tables)?;
        if k == 3 {
            deformed_case(&p, &solver, &mut report, &mut tables)?;
        }
    } else {
        geodesic_case(&p, &solver, &mut report, &mut tables)?;
    }
    Ok(Outcome { report, tables })
}

struct IdentityRow {
    radius: f64,
    d_coarse: f64,
    d_fine: f64,
    h_dev: f64,
    trace_dev: f64,
    k_minus: f64,
    stationarity: f64,
    jac_implicit: f64,
    jac_fd: f64,
    fd_vs_implicit: f64,
    bound: f64,
    measured_minus_bound: f64,
    k_form_bound: f64,
}

fn identity_case(p: &Params, solver: &SolverConfig, report: &mut Report, tables: &mut Vec<Table>) -> RunResult<()> {
    let k = p.k;
    let d = BoundaryMap::identity(k);
    let fam = hyperrigid::measure::VisualFamily::with_nodes(k, p.nodes)?;
    let coarse = NaturalMap::new(&d, fam, solver.clone())?;
    let fine = NaturalMap::new(&d, hyperrigid::measure::VisualFamily::with_nodes(k, p.fine_nodes)?, solver.clone())?;
    let pts = probes(k, p.probes, p.probe_radius, p.seed);
    let iso = DMatrix::<f64>::identity(k, k) / k as f64;
    let rows: Vec<IdentityRow> = pts
        .par_iter()
        .map(|x| -> hyperrigid::Result<IdentityRow> {
            let fx = coarse.eval(x)?;
            let ops = coarse.operators_with_image(x, fx.clone())?;
            let ji = coarse.jacobian(x, JacobianMethod::Implicit)?;
            let jf = coarse.jacobian(x, JacobianMethod::FiniteDifference)?;
            let b = jacobian_bound_check(&ops, &ji.df, OPERATOR_TOL)?;
            let id = DMatrix::<f64>::identity(k, k);
            Ok(IdentityRow {
                radius: distance(&HPoint::origin(k), x)?,
                d_coarse: distance(&fx, x)?,
                d_fine: distance(&fine.eval(x)?, x)?,
                h_dev: (&ops.h - &iso).norm(),
                trace_dev: (ops.h.trace() - 1.0).abs().max((ops.h_prime.trace() - 1.0).abs()),
                k_minus: (&ops.k_form - (id - &ops.h)).norm(),
                stationarity: ops.stationarity,
                jac_implicit: ji.jac,
                jac_fd: jf.jac,
                fd_vs_implicit: operator_norm(&(&jf.df - &ji.df)),
                bound: b.bound,
                measured_minus_bound: b.measured - b.bound,
                k_form_bound: b.k_form_bound.unwrap_or(b.bound),
            })
        })
        .collect::<hyperrigid::Result<_>>()?;
    let max = |f: &dyn Fn(&IdentityRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let quad = rows.iter().map(|r| (r.d_coarse - r.d_fine).abs()).fold(0.0, f64::max);
    let crit = if k == 3 { Some(5) } else { None };
    let n = p.probes;
    report.push(
        Check::at_most(crit, &format!("max d(F(x), x) over {n} probes, N = {}", p.nodes), max(&|r| r.d_coarse), POSITION_TOL)
            .budget("solver gradient tolerance", p.tol)
            .budget("quadrature estimate |d_N - d_4N|", quad),
    );
    report.push(
        Check::at_most(crit, &format!("max d(F(x), x) over {n} probes, N = {}", p.fine_nodes), max(&|r| r.d_fine), POSITION_TOL / 2.0)
            .budget("solver gradient tolerance", p.tol),
    );
    report.push(Check::at_most(crit, "max |H - I/k|_F", max(&|r| r.h_dev), OPERATOR_TOL).budget("quadrature nodes", p.nodes as f64));
    report.push(Check::at_most(crit, "max |Jac - 1| (implicit)", max(&|r| (r.jac_implicit - 1.0).abs()), OPERATOR_TOL));
    report.push(
        Check::at_most(crit, "max |Jac - 1| (finite differences)", max(&|r| (r.jac_fd - 1.0).abs()), OPERATOR_TOL)
            .budget("finite-difference step", hyperrigid::natural::FD_STEP),
    );
    report.push(Check::at_most(crit, "max |Jacobian bound - 1|", max(&|r| (r.bound - 1.0).abs()), OPERATOR_TOL));
    report.push(Check::at_most(crit, "max (measured Jac - bound)", rows.iter().map(|r| r.measured_minus_bound).fold(f64::NEG_INFINITY, f64::max), OPERATOR_TOL));
    report.push(Check::at_most(None, "max |bound written with K - bound|", max(&|r| (r.k_form_bound - r.bound).abs()), 1e-8));
    report.push(Check::at_most(None, "max |K - (I - H)|_F", max(&|r| r.k_minus), 1e-8));
    report.push(Check::at_most(None, "max |tr H - 1|, |tr H' - 1|", max(&|r| r.trace_dev), 1e-6));
    report.push(Check::at_most(None, "max stationarity residual at F(x)", max(&|r| r.stationarity), 1e-8));
    report.push(Check::at_most(None, "max |DF_fd - DF_implicit|", max(&|r| r.fd_vs_implicit), OPERATOR_TOL));

    let mut t = Table::new(
        "natural_map_identity",
        &["probe", "radius", "dist_N", "dist_4N", "H_dev", "jac_implicit", "jac_fd", "fd_vs_implicit", "bound"],
    );
    for (i, r) in rows.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            num(r.radius),
            num(r.d_coarse),
            num(r.d_fine),
            num(r.h_dev),
            num(r.jac_implicit),
            num(r.jac_fd),
            num(r.fd_vs_implicit),
            num(r.bound),
        ]);
    }
    tables.push(t);
    Ok(())
}

#[derive(Serialize)]
struct DeformedRow {
    config: usize,
    t: f64,
    volume_deficit: f64,
    probe_radius: f64,
    jac_implicit: f64,
    jac_fd: f64,
    fd_vs_implicit: f64,
    h_dev: f64,
    /// `(4/3)^{3/2} det(H)^{1/2} / det(K)`.
    k_form_bound: f64,
    bound: f64,
    equivariance_defect: f64,
    fell_back: bool,
}

fn deformed_case(p: &Params, solver: &SolverConfig, report: &mut Report, tables: &mut Vec<Table>) -> RunResult<()> {
    let tri = hyperrigid::triangulation::IdealTriangulation::figure_eight();
    let path = deformation_path(&tri, PathDirection::default(), p.path_steps)?;
    let source = &path.points[0].holonomy.representation;
    let steps = p.path_steps;
    let picks: Vec<usize> = (0..DEFORMED_CONFIGS)
        .map(|c| (((c + 1) * steps) as f64 / DEFORMED_CONFIGS as f64).round().max(1.0) as usize)
        .collect();
    let pts = probes(3, DEFORMED_CONFIGS, p.probe_radius, p.seed.wrapping_add(1));
    let rows: Vec<DeformedRow> = picks
        .par_iter()
        .zip(pts.par_iter())
        .enumerate()
        .map(|(c, (&j, x))| -> hyperrigid::Result<DeformedRow> {
            let pt = &path.points[j];
            let rho = &pt.holonomy.representation;
            let map = orbit_map(source, rho, p.nodes, solver)?;
            let ops = map.operators_at(x)?;
            let ji = map.jacobian(x, JacobianMethod::Implicit)?;
            let jf = map.jacobian(x, JacobianMethod::FiniteDifference)?;
            let b = jacobian_bound_check(&ops, &ji.df, OPERATOR_TOL)?;
            let table = OrbitTable::build(source, rho, ORBIT_WORD_LENGTH, OrbitRule::Shadow)?;
            let mut r = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(100 + c as u64));
            let samples: Vec<_> = (0..100).map(|_| random_direction(3, &mut r)).collect();
            let defect = equivariance_defect(&BoundaryMap::OrbitApproximation(Box::new(table)), source, rho, &samples)?;
            Ok(DeformedRow {
                config: c,
                t: pt.t,
                volume_deficit: pt.deficit,
                probe_radius: distance(&HPoint::origin(3), x)?,
                jac_implicit: ji.jac,
                jac_fd: jf.jac,
                fd_vs_implicit: operator_norm(&(&jf.df - &ji.df)),
                h_dev: (&ops.h - DMatrix::<f64>::identity(3, 3) / 3.0).norm(),
                k_form_bound: b.k_form_bound.expect("k = m"),
                bound: b.bound,
                equivariance_defect: defect,
                fell_back: ji.fell_back,
            })
        })
        .collect::<hyperrigid::Result<_>>()?;
    report.label(APPROXIMATE_LABEL);
    let max = |f: &dyn Fn(&DeformedRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let n = rows.len();
    report.push(
        Check::at_most(Some(6), &format!("max Jac₃ (finite differences) over {n} deformed configurations [{APPROXIMATE_LABEL}]"), max(&|r| r.jac_fd), 1.0 + JACOBIAN_SLACK)
            .budget("finite-difference step", hyperrigid::natural::FD_STEP)
            .budget("quadrature nodes", p.nodes as f64),
    );
    report.push(Check::at_most(Some(6), &format!("max Jac₃ (implicit) [{APPROXIMATE_LABEL}]"), max(&|r| r.jac_implicit), 1.0 + JACOBIAN_SLACK));
    report.push(Check::at_most(
        Some(6),
        &format!("max (Jac₃ - (4/3)^(3/2) det(H)^(1/2)/det(K)) [{APPROXIMATE_LABEL}]"),
        max(&|r| r.jac_fd.max(r.jac_implicit) - r.k_form_bound),
        OPERATOR_TOL,
    ));
    report.push(Check::at_most(Some(6), &format!("max |DF_fd - DF_implicit| [{APPROXIMATE_LABEL}]"), max(&|r| r.fd_vs_implicit), OPERATOR_TOL));
    report.push(Check::holds(None, "implicit derivative never fell back to finite differences", rows.iter().all(|r| !r.fell_back)));
    report.data("deformed", &rows);
    report.data("max_equivariance_defect", max(&|r| r.equivariance_defect));

    let mut t = Table::new(
        "natural_map_deformed",
        &["config", "t", "volume_deficit", "probe_radius", "jac_implicit", "jac_fd", "fd_vs_implicit", "H_dev", "bound", "equivariance_defect", "label"],
    );
    for r in &rows {
        t.push(vec![
            r.config.to_string(),
            num(r.t),
            num(r.volume_deficit),
            num(r.probe_radius),
            num(r.jac_implicit),
            num(r.jac_fd),
            num(r.fd_vs_implicit),
            num(r.h_dev),
            num(r.k_form_bound),
            num(r.equivariance_defect),
            APPROXIMATE_LABEL.into(),
        ]);
    }
    tables.push(t);
    Ok(())
}

struct GeodesicRow {
    d_coarse: f64,
    d_fine: f64,
    confinement: f64,
    vs_low: f64,
    hv_dev: f64,
    jac: f64,
    jac_fd: f64,
    bound: f64,
    measured_minus_bound: f64,
}

fn geodesic_case(p: &Params, solver: &SolverConfig, report: &mut Report, tables: &mut Vec<Table>) -> RunResult<()> {
    let (k, m) = (p.k, p.m);
    let d = BoundaryMap::TotallyGeodesic { source_dim: k, g: Isometry::identity(m) };
    let fam = |n| hyperrigid::measure::VisualFamily::with_nodes(k, n);
    let coarse = NaturalMap::new(&d, fam(p.nodes)?, solver.clone())?;
    let fine = NaturalMap::new(&d, fam(p.fine_nodes)?, solver.clone())?;
    let low = NaturalMap::new(&BoundaryMap::identity(k), fam(p.nodes)?, solver.clone())?;
    let pts = probes(k, p.probes, p.probe_radius, p.seed);
    let rows: Vec<GeodesicRow> = pts
        .par_iter()
        .map(|x| -> hyperrigid::Result<GeodesicRow> {
            let xe = x.embed(m);
            let fx = coarse.eval(x)?;
            let ops = coarse.operators_with_image(x, fx.clone())?;
            let ji = coarse.jacobian(x, JacobianMethod::Implicit)?;
            let jf = coarse.jacobian(x, JacobianMethod::FiniteDifference)?;
            let b = jacobian_bound_check(&ops, &ji.df, OPERATOR_TOL)?;
            Ok(GeodesicRow {
                d_coarse: distance(&fx, &xe)?,
                d_fine: distance(&fine.eval(x)?, &xe)?,
                confinement: distance_to_copy(&fx, k),
                vs_low: distance(&fx, &low.eval(x)?.embed(m))?,
                hv_dev: b.restricted_h_deviation,
                jac: ji.jac,
                jac_fd: jf.jac,
                bound: b.bound,
                measured_minus_bound: b.measured - b.bound,
            })
        })
        .collect::<hyperrigid::Result<_>>()?;
    let max = |f: &dyn Fn(&GeodesicRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let crit = if k == 3 && m > 3 { Some(10) } else { None };
    let n = p.probes;
    report.push(
        Check::at_most(crit, &format!("max d(F(x), x) in H^{m} over {n} probes, N = {}", p.nodes), max(&|r| r.d_coarse), POSITION_TOL)
            .budget("solver gradient tolerance", p.tol),
    );
    report.push(Check::at_most(crit, &format!("max d(F(x), x) in H^{m}, N = {}", p.fine_nodes), max(&|r| r.d_fine), POSITION_TOL / 2.0));
    report.push(Check::at_most(crit, &format!("max distance of F(x) to the geodesic H^{k}"), max(&|r| r.confinement), POSITION_TOL));
    report.push(Check::at_most(crit, &format!("max d(F_m(x), F_k(x)) against the H^{k} computation"), max(&|r| r.vs_low), POSITION_TOL));
    report.push(Check::at_most(crit, "max |H^V - I/k|_F", max(&|r| r.hv_dev), OPERATOR_TOL));
    report.push(Check::at_most(crit, "max |Jac_k - 1| (implicit)", max(&|r| (r.jac - 1.0).abs()), OPERATOR_TOL));
    report.push(Check::at_most(None, "max |Jac_k - 1| (finite differences)", max(&|r| (r.jac_fd - 1.0).abs()), OPERATOR_TOL));
    report.push(Check::at_most(crit, "max |restricted bound - 1|", max(&|r| (r.bound - 1.0).abs()), OPERATOR_TOL));
    report.push(Check::at_most(crit, "max (measured Jac_k - restricted bound)", max(&|r| r.measured_minus_bound), OPERATOR_TOL));
    let mut t = Table::new(
        "natural_map_geodesic",
        &["probe", "dist_N", "dist_4N", "distance_to_copy", "vs_low_dimension", "HV_dev", "jac", "jac_fd", "bound"],
    );
    for (i, r) in rows.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            num(r.d_coarse),
            num(r.d_fine),
            num(r.confinement),
            num(r.vs_low),
            num(r.hv_dev),
            num(r.jac),
            num(r.jac_fd),
            num(r.bound),
        ]);
    }
    tables.push(t);
    Ok(())
}
