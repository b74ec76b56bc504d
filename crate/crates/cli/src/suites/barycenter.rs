//! `barycenter-suite`: stationarity, equivariance, restart independence and
//! agreement with a brute-force grid minimizer.

use hyperrigid::barycenter::{barycenter, barycenter_from, phi, result_deviation, SolverConfig};
use hyperrigid::hyperbolic::{distance, random_direction, random_point, BoundaryPoint, HPoint, Isometry};
use hyperrigid::measure::{pushforward, BoundaryMeasure};
use hyperrigid::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::oracle::grid_barycenter;
use crate::report::{num, Check, Outcome, Report, Table};
use crate::{ExperimentConfig, RunResult};

const STATIONARITY: f64 = 1e-10;
const EQUIVARIANCE: f64 = 1e-8;
const ORACLE_AGREEMENT: f64 = 2e-3;
const ORACLE_RADIUS: f64 = 3.0;
const ORACLE_MEASURES: usize = 20;
/// Measures whose barycenter lies beyond this radius are skipped by the
/// oracle comparison, whose search region is the ball of radius 3.
const ORACLE_ACCEPT_RADIUS: f64 = 2.9;

#[derive(Serialize)]
struct Params {
    dimensions: Vec<usize>,
    samples: usize,
    oracle_measures: usize,
    /// Grid spacing of the first oracle pass, per dimension.
    oracle_coarse_step: Vec<f64>,
    oracle_fine_step: f64,
    seed: u64,
    tol: f64,
}

fn stream(seed: u64, s: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(s);
    r
}

fn random_atomic(k: usize, n: usize, r: &mut ChaCha8Rng) -> BoundaryMeasure {
    let raw: Vec<f64> = (0..n).map(|_| 1.0 + 0.5 * r.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    BoundaryMeasure::atomic(raw.iter().map(|w| (w / total, random_direction(k, r))).collect())
        .expect("positive weights summing to one")
}

struct EquivarianceSample {
    gradient: f64,
    moved_gradient: f64,
    deviation: f64,
    restart: f64,
}

fn equivariance_sample(k: usize, i: usize, seed: u64, cfg: &SolverConfig) -> hyperrigid::Result<EquivarianceSample> {
    let mut r = stream(seed, 1000 * k as u64 + i as u64);
    let beta = random_atomic(k, 3 + i % 4, &mut r);
    let g = Isometry::random(k, 2.0, &mut r);
    let b0 = barycenter(&beta, cfg)?;
    let moved = pushforward(&beta, |t| g.act_boundary(t))?;
    let b1 = barycenter(&moved, cfg)?;
    let (p0, p1) = match (b0.interior(), b1.interior()) {
        (Some(p0), Some(p1)) => (p0, p1),
        _ => return Err(Error::InvalidMeasure("random measure has a dominant atom".into())),
    };
    let deviation = distance(&g.act(p0)?, p1)?;
    let restart = result_deviation(&barycenter_from(&beta, cfg, random_point(k, 3.0, &mut r))?, &b0);
    Ok(EquivarianceSample { gradient: b0.gradient_norm, moved_gradient: b1.gradient_norm, deviation, restart })
}

struct OracleSample {
    gradient: f64,
    solver: HPoint,
    grid: HPoint,
    skipped: usize,
}

fn oracle_sample(k: usize, i: usize, seed: u64, coarse: f64, fine: f64, cfg: &SolverConfig) -> hyperrigid::Result<OracleSample> {
    let mut r = stream(seed, 500_000 + 1000 * k as u64 + i as u64);
    let mut skipped = 0;
    loop {
        let beta = random_atomic(k, 4, &mut r);
        let res = barycenter(&beta, cfg)?;
        let p = res.interior().expect("atoms below 1/2").clone();
        if distance(&HPoint::origin(k), &p)? > ORACLE_ACCEPT_RADIUS {
            skipped += 1;
            continue;
        }
        let atoms: Vec<_> = beta.atoms().iter().map(|(w, t)| (*w, t.direction().clone())).collect();
        let grid = HPoint::new(grid_barycenter(&atoms, ORACLE_RADIUS, coarse, fine))?;
        return Ok(OracleSample { gradient: res.gradient_norm, solver: p, grid, skipped });
    }
}

pub fn run(cfg: &ExperimentConfig) -> RunResult<Outcome> {
    let dims = match cfg.k {
        Some(k) => vec![k],
        None => vec![2, 3],
    };
    let p = Params {
        samples: cfg.samples.unwrap_or(100),
        // twenty in total, split between the dimensions
        oracle_measures: ORACLE_MEASURES / dims.len(),
        oracle_coarse_step: dims.iter().map(|&k| if k == 2 { 1e-3 } else { 0.02 }).collect(),
        oracle_fine_step: 1e-5,
        seed: cfg.seed.unwrap_or(7),
        tol: cfg.tol.unwrap_or(STATIONARITY),
        dimensions: dims.clone(),
    };
    let solver = SolverConfig::with_tol(p.tol);
    let mut report = Report::new("barycenter-suite", &p);
    let mut table = Table::new("barycenter_oracle", &["k", "measure", "solver_vs_grid", "gradient_norm"]);
    let mut max_gradient = 0.0_f64;

    for (di, &k) in dims.iter().enumerate() {
        let eq: Vec<EquivarianceSample> = (0..p.samples)
            .into_par_iter()
            .map(|i| equivariance_sample(k, i, p.seed, &solver))
            .collect::<hyperrigid::Result<_>>()?;
        let dev = eq.iter().map(|s| s.deviation).fold(0.0, f64::max);
        let restart = eq.iter().map(|s| s.restart).fold(0.0, f64::max);
        max_gradient = eq.iter().map(|s| s.gradient.max(s.moved_gradient)).fold(max_gradient, f64::max);
        report.push(
            Check::at_most(Some(4), &format!("equivariance deviation over {} random (g, β), k = {k}", p.samples), dev, EQUIVARIANCE)
                .budget("solver gradient tolerance", p.tol),
        );
        report.push(Check::at_most(None, &format!("restart independence, k = {k}"), restart, EQUIVARIANCE));

        let coarse = p.oracle_coarse_step[di];
        let oracle: Vec<OracleSample> = (0..p.oracle_measures)
            .map(|i| oracle_sample(k, i, p.seed, coarse, p.oracle_fine_step, &solver))
            .collect::<hyperrigid::Result<_>>()?;
        let mut worst = 0.0_f64;
        for (i, s) in oracle.iter().enumerate() {
            let d = distance(&s.solver, &s.grid)?;
            worst = worst.max(d);
            max_gradient = max_gradient.max(s.gradient);
            table.push(vec![k.to_string(), i.to_string(), num(d), num(s.gradient)]);
        }
        report.push(
            Check::at_most(Some(4), &format!("grid oracle agreement on {} random 4-atom measures, k = {k}", p.oracle_measures), worst, ORACLE_AGREEMENT)
                .budget("oracle coarse spacing", coarse)
                .budget("oracle final spacing", p.oracle_fine_step / 10.0),
        );
        report.data(&format!("oracle_skipped_k{k}"), oracle.iter().map(|s| s.skipped).sum::<usize>());

        // coercivity along rays at distance 5
        let mut r = stream(p.seed, 900_000 + k as u64);
        let beta = random_atomic(k, 5, &mut r);
        let b = barycenter(&beta, &solver)?;
        let fmin = phi(&beta, b.interior().expect("atoms below 1/2"))?;
        let mut coercive = true;
        for _ in 0..20 {
            coercive &= phi(&beta, &HPoint::at_distance(&random_direction(k, &mut r), 5.0))? > fmin;
        }
        report.push(Check::holds(None, &format!("φ exceeds its minimum along 20 rays at r = 5, k = {k}"), coercive));

        let mut e = vec![0.0; k];
        e[0] = 1.0;
        let a = BoundaryPoint::from_slice(&e)?;
        let two = BoundaryMeasure::atomic(vec![(0.5, a.clone()), (0.5, a.antipode())])?;
        let raised = matches!(barycenter(&two, &solver), Err(Error::TwoEqualAtoms));
        report.push(Check::holds(Some(4), &format!("two equal atoms raise the declared error, k = {k}"), raised));
    }
    report.push(
        Check::at_most(Some(4), "stationarity |grad φ| at every returned interior barycenter", max_gradient, STATIONARITY)
            .budget("solver gradient tolerance", p.tol),
    );
    Ok(Outcome { report, tables: vec![table] })
}
