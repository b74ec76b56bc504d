//! `rigidity-report`: natural-map diagnostics along the deformation path,
//! tabulated against the volume deficit.

use hyperrigid::barycenter::SolverConfig;
use hyperrigid::hyperbolic::{random_point, HPoint};
use hyperrigid::natural::{convergence_diagnostics, DiagnosticInput, DiagnosticRow, JacobianMethod};
use hyperrigid::volume::{deformation_path, PathDirection};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::natural::{orbit_map, APPROXIMATE_LABEL};
use super::volume::VOLUME_LABEL;
use crate::oracle::spearman;
use crate::report::{num, Check, Outcome, Report, Table};
use crate::{ExperimentConfig, RunResult};

#[derive(Serialize)]
struct Params {
    triangulation: String,
    steps: usize,
    direction: PathDirection,
    nodes: usize,
    /// The origin plus this many random probes (used for Lipschitz ratios).
    extra_probes: usize,
    probe_radius: f64,
    method: JacobianMethod,
    seed: u64,
    tol: f64,
}

pub fn run(cfg: &ExperimentConfig) -> RunResult<Outcome> {
    let tri = super::triangulation(cfg)?;
    let p = Params {
        triangulation: tri.name().to_string(),
        steps: cfg.steps.unwrap_or(50),
        direction: PathDirection::default(),
        nodes: cfg.nodes.unwrap_or(2000),
        extra_probes: cfg.samples.unwrap_or(4),
        probe_radius: 0.5,
        method: JacobianMethod::Implicit,
        seed: cfg.seed.unwrap_or(13),
        tol: cfg.tol.unwrap_or(1e-10),
    };
    let solver = SolverConfig::with_tol(p.tol);
    let path = deformation_path(&tri, p.direction, p.steps)?;
    let source = &path.points[0].holonomy.representation;
    let k = source.target_dim();
    let mut r = ChaCha8Rng::seed_from_u64(p.seed);
    let mut probes = vec![HPoint::origin(k)];
    probes.extend((0..p.extra_probes).map(|_| random_point(k, p.probe_radius, &mut r)));

    let per_step: Vec<Vec<DiagnosticRow>> = path
        .points
        .par_iter()
        .map(|pt| -> hyperrigid::Result<Vec<DiagnosticRow>> {
            let rho = &pt.holonomy.representation;
            let map = orbit_map(source, rho, p.nodes, &solver)?;
            let input = DiagnosticInput { parameter: pt.t, rho, map: &map, volume: pt.volume.value };
            convergence_diagnostics(&[input], &probes, path.complete_volume, p.method)
        })
        .collect::<hyperrigid::Result<_>>()?;
    let rows: Vec<DiagnosticRow> = per_step.into_iter().flatten().collect();

    let mut report = Report::new("rigidity-report", &p);
    report.label(APPROXIMATE_LABEL);
    report.label(VOLUME_LABEL);
    // rank correlation over the steps t > 0 at the origin probe
    let origin: Vec<&DiagnosticRow> = rows.iter().filter(|r| r.probe == 0 && r.parameter > 0.0).collect();
    let deficit: Vec<f64> = origin.iter().map(|r| r.volume_deficit).collect();
    let h_dev: Vec<f64> = origin.iter().map(|r| r.h_dev).collect();
    let jac_dev: Vec<f64> = origin.iter().map(|r| (r.jac - 1.0).abs()).collect();
    let rho_h = spearman(&h_dev, &deficit);
    let rho_j = spearman(&jac_dev, &deficit);
    let n = origin.len();
    report.push(Check::within(Some(9), &format!("rank correlation of |H - I/3| with the deficit over {n} steps [{APPROXIMATE_LABEL}]"), rho_h, 1.0, 1e-12));
    report.push(Check::within(Some(9), &format!("rank correlation of |Jac₃ - 1| with the deficit over {n} steps [{APPROXIMATE_LABEL}]"), rho_j, 1.0, 1e-12));
    let eps = rows.iter().map(|r| r.h_eig_dev).fold(0.0, f64::max);
    let df = rows.iter().map(|r| r.df_norm).fold(0.0, f64::max);
    report.push(
        Check::at_most(Some(9), "max |DF| against √3 + 9ε/2", df, 3f64.sqrt() + 4.5 * eps)
            .budget("ε = max eigenvalue deviation of H from 1/3", eps)
            .budget("quadrature nodes", p.nodes as f64),
    );
    // the same chain without linearising in ε: λ_min(K) ≥ 2/3 - δ and
    // λ_max(H) ≤ 1/3 + δ give |DF| ≤ 2 (1/3 + δ)^(1/2) / (2/3 - δ) pointwise
    let ratio = rows
        .iter()
        .map(|r| {
            let d = r.h_eig_dev;
            if d < 2.0 / 3.0 { r.df_norm * (2.0 / 3.0 - d) / (2.0 * (1.0 / 3.0 + d).sqrt()) } else { 0.0 }
        })
        .fold(0.0, f64::max);
    report.push(Check::at_most(None, "max |DF| / (2 (1/3 + δ)^(1/2) / (2/3 - δ)) with pointwise δ", ratio, 1.0));
    let first_violation = rows
        .iter()
        .filter(|r| r.df_norm > 3f64.sqrt() + 4.5 * r.h_eig_dev)
        .map(|r| r.h_eig_dev)
        .fold(f64::INFINITY, f64::min);
    report.data("pointwise_linear_bound_first_violation_delta", if first_violation.is_finite() { Some(first_violation) } else { None });
    let jac = rows.iter().map(|r| r.jac).fold(0.0, f64::max);
    report.push(Check::at_most(None, "max Jac₃ over all steps and probes", jac, 1.0 + 5e-3));
    let breaks = |v: &[f64]| {
        (1..v.len())
            .filter(|&i| v[i] <= v[i - 1])
            .map(|i| origin[i].parameter)
            .collect::<Vec<f64>>()
    };
    report.data("h_dev_monotonicity_breaks_at_t", breaks(&h_dev));
    report.data("jac_dev_monotonicity_breaks_at_t", breaks(&jac_dev));
    report.data("deficit_monotonicity_breaks_at_t", breaks(&deficit));
    report.data("spearman_h_dev", rho_h);
    report.data("spearman_jac_dev", rho_j);

    let gens = rows.first().map(|r| r.translation_lengths.len()).unwrap_or(0);
    let mut header: Vec<String> = ["parameter", "probe", "jac", "H_dev", "H_eig_dev", "DF_norm", "lipschitz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..gens).map(|g| format!("translation_length_{g}")));
    header.extend(["straight_map_volume", "volume_deficit", "label"].iter().map(|s| s.to_string()));
    let mut t = Table::with_header("diagnostics", header);
    for r in &rows {
        let mut row = vec![
            num(r.parameter),
            r.probe.to_string(),
            num(r.jac),
            num(r.h_dev),
            num(r.h_eig_dev),
            num(r.df_norm),
            num(r.lipschitz),
        ];
        row.extend(r.translation_lengths.iter().map(|l| num(*l)));
        row.push(num(r.volume));
        row.push(num(r.volume_deficit));
        row.push(if r.approximate { APPROXIMATE_LABEL.into() } else { String::new() });
        t.push(row);
    }
    Ok(Outcome { report, tables: vec![t] })
}
