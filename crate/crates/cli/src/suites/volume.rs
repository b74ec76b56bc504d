//! `volume-path`: the complete structure, a deformation path toward a shape
//! degeneration and a random scan of the gluing variety.

use hyperrigid::holonomy::holonomy_from_shapes;
use hyperrigid::triangulation::{complete_structure, regular_shape, solve_gluing, NewtonConfig, ShapeVector};
use hyperrigid::volume::{deformation_path, random_solution_scan, volume_of_shapes, DeformationPath, PathDirection};
use num_complex::Complex64;
use serde::Serialize;

use crate::oracle::figure_eight_volume;
use crate::report::{num, Check, Outcome, Report, Table};
use crate::{ExperimentConfig, RunResult};

pub const VOLUME_LABEL: &str = "straight-map volume";
const FIGURE_EIGHT_VOLUME: f64 = 2.029883212819;
/// Deficits are asserted for `t` at or beyond this parameter.
const DEFICIT_FROM_T: f64 = 1e-2;

#[derive(Serialize)]
struct Params {
    triangulation: String,
    steps: usize,
    direction: PathDirection,
    scan_samples: usize,
    equality_threshold: f64,
    seed: u64,
}

pub fn path_table(path: &DeformationPath) -> Table {
    let n = path.complete.len();
    let gens = path.points.first().map(|p| p.translation_lengths.len()).unwrap_or(0);
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        header.push(format!("re_z{i}"));
        header.push(format!("im_z{i}"));
    }
    header.push("straight_map_volume".into());
    header.push("deficit".into());
    for g in 0..gens {
        header.push(format!("translation_length_{g}"));
    }
    header.push("edge_residual".into());
    header.push("degeneration_distance".into());
    let mut t = Table::with_header("volume_path", header);
    for p in &path.points {
        let mut row = vec![num(p.t)];
        for z in &p.shapes.0 {
            row.push(num(z.re));
            row.push(num(z.im));
        }
        row.push(num(p.volume.value));
        row.push(num(p.deficit));
        row.extend(p.translation_lengths.iter().map(|l| num(*l)));
        row.push(num(p.edge_residual));
        row.push(num(p.degeneration_distance));
        t.push(row);
    }
    t
}

pub fn run(cfg: &ExperimentConfig) -> RunResult<Outcome> {
    let tri = super::triangulation(cfg)?;
    let builtin = cfg.triangulation.is_none();
    let p = Params {
        triangulation: tri.name().to_string(),
        steps: cfg.steps.unwrap_or(50),
        direction: PathDirection::default(),
        scan_samples: cfg.samples.unwrap_or(10_000),
        equality_threshold: cfg.tol.unwrap_or(1e-13),
        seed: cfg.seed.unwrap_or(3),
    };
    let mut report = Report::new("volume-path", &p);
    report.label(VOLUME_LABEL);
    let c7 = if builtin { Some(7) } else { None };
    let c8 = if builtin { Some(8) } else { None };

    // complete structure
    if builtin {
        let z = ShapeVector(vec![regular_shape(); tri.len()]);
        let res = tri.gluing_residual(&z)?;
        report.push(Check::at_most(c7, "edge residual at z = e^(iπ/3)", res.edge_max(), 1e-12));
        report.push(Check::at_most(c7, "completeness residual at z = e^(iπ/3)", res.cusp_max(), 1e-12));
        let start = ShapeVector(vec![Complex64::new(0.3, 0.7), Complex64::new(0.8, 1.1)]);
        let (solved, _) = solve_gluing(&tri, &start, &NewtonConfig::default())?;
        report.push(Check::at_most(None, "Newton from an interior start recovers e^(iπ/3)", solved.distance(&z), 1e-10));
    }
    let complete = complete_structure(&tri)?;
    let vol = volume_of_shapes(&tri, &complete)?;
    if builtin {
        let oracle = figure_eight_volume();
        report.push(
            Check::within(c7, "complete volume against the Lobachevsky-series oracle", vol.value, oracle, 1e-9)
                .budget("series truncation estimate", vol.error_estimate),
        );
        report.push(Check::within(None, "complete volume against 2.029883212819", vol.value, FIGURE_EIGHT_VOLUME, 1e-9));
    }
    let hol = holonomy_from_shapes(&tri, &complete)?;
    report.push(Check::at_most(c7, "holonomy relator residual", hol.representation.relator_residual(), 1e-8));
    report.push(Check::at_most(None, "holonomy relator residual in SL(2, C)", hol.relator_residual_sl2(), 1e-8));
    let lengths = hol.representation.generator_lengths();
    report.push(Check::at_most(c7, "generator translation lengths at the complete structure", lengths.iter().cloned().fold(0.0, f64::max), 1e-6));
    report.push(Check::within(None, "straight volume of the developed vertices", hol.straight_volume()?, vol.value, 1e-9));
    report.data("complete_shapes", complete.0.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
    report.data("complete_volume", vol);
    report.data("relators", hol.presentation.relators.iter().map(|w| w.to_string()).collect::<Vec<_>>());

    // deformation path
    let path = deformation_path(&tri, p.direction, p.steps)?;
    let tail: Vec<f64> = path.points.iter().filter(|q| q.t >= DEFICIT_FROM_T).map(|q| q.deficit).collect();
    let min_tail = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    report.push(Check::above(c8, "min deficit over t ≥ 1e-2", min_tail, 1e-6));
    let eps = path.near_ideal_epsilon.unwrap_or(f64::NAN);
    report.push(Check::above(c8, "ε = min deficit over the near-ideal tail", eps, 0.0).budget("near-ideal distance", hyperrigid::volume::NEAR_IDEAL_DISTANCE));
    report.push(Check::above(None, "deficit strictly increases along the path (min volume drop)", path.min_volume_drop, 0.0));
    let sl2 = path.points.iter().map(|q| q.holonomy.relator_residual_sl2()).fold(0.0, f64::max);
    report.push(Check::at_most(None, "relator residual in SL(2, C) along the path", sl2, 1e-8));
    let edge = path.points.iter().map(|q| q.edge_residual).fold(0.0, f64::max);
    report.push(Check::at_most(None, "edge residual along the path", edge, 1e-8));
    let halved = deformation_path(&tri, p.direction, 2 * p.steps)?;
    let consistency = path
        .points
        .iter()
        .enumerate()
        .map(|(j, q)| (q.volume.value - halved.points[2 * j].volume.value).abs())
        .fold(0.0, f64::max);
    report.push(Check::at_most(None, "path volumes change by at most 1e-8 when the step is halved", consistency, 1e-8));
    report.data("near_ideal_epsilon", path.near_ideal_epsilon);
    report.data("continuation_halvings", path.halvings);

    // random gluing-variety solutions
    let scan = random_solution_scan(&tri, p.scan_samples, p.seed, p.equality_threshold)?;
    report.push(
        Check::at_most(c8, &format!("max volume over {} random gluing-variety solutions", scan.solutions), scan.max_volume, scan.complete_volume + 1e-9)
            .budget("Newton residual tolerance", 1e-13),
    );
    report.push(
        Check::at_most(c8, "distance to the complete solution of near-maximal volumes", scan.max_near_equality_distance, 1e-6)
            .budget("near-equality threshold", scan.equality_threshold),
    );
    report.data("random_scan", &scan);

    Ok(Outcome { report, tables: vec![path_table(&path)] })
}
