//! `psi-scan` and `psi-converse`.

use hyperrigid::spd::{
    boundary_bound_scan, boundary_sup_k3, edge_sequence, global_bound_scan, psi, psi_charpoly, psi_max,
    quantitative_converse, TraceOneSpd,
};
use serde::Serialize;

use crate::report::{num, Check, Outcome, Report, Table};
use crate::{ExperimentConfig, RunResult};

/// Acceptance limit for the k = 3 boundary scan at margin 1e-3.
const BOUNDARY_LIMIT: f64 = 0.2501;
/// Allowed factor over the vertex envelope for k ≥ 4.
const ENVELOPE_FACTOR: f64 = 1.01;
const EDGE_MARGIN: f64 = 1e-4;
const EDGE_ALPHAS: [f64; 3] = [0.2, 0.5, 0.8];

#[derive(Serialize)]
struct ScanParams {
    dimensions: Vec<usize>,
    samples: usize,
    boundary_samples: usize,
    margin: f64,
    vertex_margin: f64,
    edge_margin: f64,
    seed: u64,
    tol: f64,
}

pub fn scan(cfg: &ExperimentConfig) -> RunResult<Outcome> {
    let dims = match cfg.k {
        Some(k) => vec![k],
        None => vec![3, 4, 5],
    };
    let p = ScanParams {
        samples: cfg.samples.unwrap_or(1_000_000),
        boundary_samples: cfg.samples.map(|s| s.min(100_000)).unwrap_or(100_000),
        margin: cfg.margin.unwrap_or(1e-3),
        vertex_margin: cfg.margin.unwrap_or(1e-2),
        edge_margin: EDGE_MARGIN,
        seed: cfg.seed.unwrap_or(0),
        tol: cfg.tol.unwrap_or(1e-12),
        dimensions: dims.clone(),
    };
    let mut report = Report::new("psi-scan", &p);
    let mut table = Table::new(
        "psi_scan",
        &["k", "scan", "margin", "samples", "max_value", "bound", "allowance", "pass"],
    );

    if dims.contains(&3) {
        let iso = TraceOneSpd::isotropic(3);
        report.push(Check::within(Some(1), "psi(I/3) = 27/64", psi(&iso), 27.0 / 64.0, 1e-14));
    }
    let mut globals = Vec::new();
    for &k in &dims {
        if k < 3 {
            // ψ is unbounded for k = 2: witness sup 1/(a(1-a)) along the diagonal family
            let a = 1e-6;
            let v = psi(&TraceOneSpd::new(nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![a, 1.0 - a])))?);
            report.push(Check::above(None, "k = 2 unboundedness witness ψ(diag(1e-6, 1-1e-6))", v, 1e5));
            continue;
        }
        let g = global_bound_scan(k, p.samples, p.seed.wrapping_add(k as u64), p.tol)?;
        report.push(
            Check::at_most(Some(1), &format!("global bound k = {k}"), g.max_value, g.bound + p.tol)
                .budget("sampling tolerance", p.tol),
        );
        if let Ok(h) = TraceOneSpd::new(nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            g.argmax_eigenvalues.clone(),
        ))) {
            report.push(Check::at_most(
                None,
                &format!("characteristic-polynomial identity at argmax, k = {k}"),
                (psi_charpoly(&h) - psi(&h)).abs(),
                1e-12,
            ));
        }
        table.push(vec![
            k.to_string(),
            "global".into(),
            String::new(),
            p.samples.to_string(),
            num(g.max_value),
            num(psi_max(k)),
            num(p.tol),
            g.pass.to_string(),
        ]);
        globals.push(g);
    }
    report.data("global", &globals);

    if dims.contains(&3) {
        let b = boundary_bound_scan(3, p.margin, p.boundary_samples, p.seed.wrapping_add(100))?;
        let sup = boundary_sup_k3(p.margin);
        report.push(
            Check::at_most(Some(2), &format!("k = 3 boundary scan max, margin {}", p.margin), b.max_value, BOUNDARY_LIMIT)
                .budget("sup over margin region", sup)
                .budget("margin allowance above 1/4", b.tolerance),
        );
        report.push(
            Check::at_most(None, "k = 3 boundary scan max within 1/4 + margin allowance", b.max_value, 0.25 + b.tolerance)
                .budget("margin allowance above 1/4", b.tolerance),
        );
        table.push(vec![
            "3".into(),
            "boundary".into(),
            num(p.margin),
            p.boundary_samples.to_string(),
            num(b.max_value),
            num(0.25),
            num(b.tolerance),
            (b.max_value <= BOUNDARY_LIMIT).to_string(),
        ]);
        report.data("boundary_k3", &b);
        report.data("boundary_sup_k3", sup);

        let mut seqs = Vec::new();
        for alpha in EDGE_ALPHAS {
            let seq = edge_sequence(alpha, p.edge_margin, 21);
            let last = *seq.last().expect("nonempty");
            report.push(Check::at_most(
                Some(2),
                &format!("edge sequence toward ({alpha}, 0, {:.1}) ends within 1e-4 of 0", 1.0 - alpha),
                last,
                1e-4,
            ));
            report.push(Check::holds(
                Some(2),
                &format!("edge sequence toward ({alpha}, 0, {:.1}) decreases", 1.0 - alpha),
                seq.windows(2).all(|w| w[1] < w[0]),
            ));
            seqs.push(serde_json::json!({ "alpha": alpha, "values": seq }));
        }
        report.data("edge_sequences", seqs);
    }

    let vertex_dims: Vec<usize> = match cfg.k {
        Some(k) if k >= 4 => vec![k],
        Some(_) => vec![],
        None => vec![4],
    };
    let mut vertex = Vec::new();
    for k in vertex_dims {
        let margin = p.vertex_margin.min(0.99 / k as f64);
        let v = boundary_bound_scan(k, margin, p.boundary_samples, p.seed.wrapping_add(200 + k as u64))?;
        let ratio = v.max_envelope_ratio.unwrap_or(f64::INFINITY);
        report.push(Check::at_most(
            Some(2),
            &format!("k = {k} vertex samples over envelope s^(k-3)/(k-1)^(k-1), Σ small ≤ {margin}"),
            ratio,
            ENVELOPE_FACTOR,
        ));
        table.push(vec![
            k.to_string(),
            "vertex".into(),
            num(margin),
            p.boundary_samples.to_string(),
            num(v.max_value),
            num(v.bound),
            num(ratio),
            (ratio <= ENVELOPE_FACTOR).to_string(),
        ]);
        vertex.push(v);
    }
    report.data("vertex", &vertex);
    Ok(Outcome { report, tables: vec![table] })
}

#[derive(Serialize)]
struct ConverseParams {
    k: usize,
    eps: Vec<f64>,
    trials: usize,
    grid_step: f64,
    seed: u64,
}

pub fn converse(cfg: &ExperimentConfig) -> RunResult<Outcome> {
    let k = cfg.k.unwrap_or(3);
    let p = ConverseParams {
        k,
        eps: match cfg.eps {
            Some(e) => vec![e],
            None => vec![0.0, 1e-4, 1e-2],
        },
        trials: cfg.samples.unwrap_or(100_000),
        grid_step: cfg.margin.unwrap_or(1e-3),
        seed: cfg.seed.unwrap_or(0),
    };
    let mut report = Report::new("psi-converse", &p);
    let mut table = Table::new("psi_converse", &["k", "eps", "trials", "accepted", "delta_max", "grid_certified_radius"]);
    let mut reports = Vec::new();
    for (i, &eps) in p.eps.iter().enumerate() {
        let grid = if k == 3 && eps > 0.0 { Some(p.grid_step) } else { None };
        let r = quantitative_converse(k, eps, p.trials, p.seed.wrapping_add(i as u64), grid)?;
        let limit = if eps == 0.0 {
            Some((Some(3), 1e-7))
        } else if eps == 1e-4 && k == 3 {
            Some((Some(3), 0.02))
        } else if eps == 1e-2 && k == 3 {
            Some((None, 0.2))
        } else {
            None
        };
        if let Some((criterion, lim)) = limit {
            report.push(Check::at_most(criterion, &format!("sampled δ_max at ε = {eps}"), r.delta_max, lim));
            if let Some(g) = r.grid_bound {
                report.push(
                    Check::at_most(criterion, &format!("grid-certified radius at ε = {eps}"), g, lim)
                        .budget("grid step", p.grid_step),
                );
            }
        }
        if let Some(g) = r.grid_bound {
            report.push(Check::at_most(None, &format!("sampled δ_max inside certified radius at ε = {eps}"), r.delta_max, g));
        }
        table.push(vec![
            k.to_string(),
            num(eps),
            r.trials.to_string(),
            r.accepted.to_string(),
            num(r.delta_max),
            r.grid_bound.map(num).unwrap_or_default(),
        ]);
        reports.push(r);
    }
    let mut sorted: Vec<_> = reports.iter().map(|r| (r.eps, r.delta_max)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.len() > 1 {
        report.push(Check::holds(None, "δ_max nondecreasing in ε", sorted.windows(2).all(|w| w[0].1 <= w[1].1)));
    }
    report.data("converse", &reports);
    Ok(Outcome { report, tables: vec![table] })
}
