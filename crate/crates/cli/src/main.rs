use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperrigid_cli::{run, Command, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "hyperrigid", version, about = "Numerical experiments on barycenters, natural maps and representation volumes")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Barycenter stationarity, equivariance and grid-oracle agreement.
    BarycenterSuite(Flags),
    /// Global, boundary and vertex bounds for ψ = det H / det(I - H)².
    PsiScan(Flags),
    /// Radius of the near-maximal level sets of ψ.
    PsiConverse(Flags),
    /// Natural map checks: identity (m = k), deformed orbit maps, m > k.
    NaturalMapSuite(Flags),
    /// Figure-eight volume, deformation path and random gluing scan.
    VolumePath(Flags),
    /// Diagnostic table along the deformation path.
    RigidityReport(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Number of random samples (meaning depends on the subcommand).
    #[arg(long)]
    samples: Option<usize>,
    /// Triangulation JSON (default: figure-eight knot complement).
    #[arg(long)]
    triangulation: Option<PathBuf>,
    /// Output directory for JSON and CSV reports.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn into_config(self) -> Result<ExperimentConfig, RunError> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        Ok(base.overlay(ExperimentConfig {
            k: self.k,
            m: self.m,
            nodes: self.nodes,
            seed: self.seed,
            tol: self.tol,
            steps: self.steps,
            margin: self.margin,
            eps: self.eps,
            samples: self.samples,
            out: self.out,
            triangulation: self.triangulation,
        }))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::BarycenterSuite(f) => (Command::BarycenterSuite, f),
        Sub::PsiScan(f) => (Command::PsiScan, f),
        Sub::PsiConverse(f) => (Command::PsiConverse, f),
        Sub::NaturalMapSuite(f) => (Command::NaturalMapSuite, f),
        Sub::VolumePath(f) => (Command::VolumePath, f),
        Sub::RigidityReport(f) => (Command::RigidityReport, f),
    };
    let cfg = match flags.into_config().and_then(|c| c.validate().map(|_| c).map_err(RunError::from)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match run(command, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {} failed: {e}", command.name());
            return ExitCode::from(1);
        }
    };
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("reports"));
    match outcome.write(&dir) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let report = &outcome.report;
    for c in &report.checks {
        println!("{} {c}", if c.pass { "PASS" } else { "FAIL" });
    }
    if report.pass {
        println!("{}: all checks passed", report.command);
        ExitCode::SUCCESS
    } else {
        println!("{}: {} check(s) failed", report.command, report.failures().count());
        ExitCode::from(1)
    }
}
