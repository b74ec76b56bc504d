//! Batch experiments over the `hyperrigid` library. Each suite resolves its
//! parameters from an [`ExperimentConfig`], runs its checks and returns an
//! [`Outcome`] that can be written as JSON and CSV.

pub mod config;
pub mod oracle;
pub mod report;
pub mod suites;

pub use config::{ConfigError, ExperimentConfig};
pub use report::{Check, Outcome, Report, Table};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Library(#[from] hyperrigid::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// The subcommands, in the order the acceptance criteria use them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    BarycenterSuite,
    PsiScan,
    PsiConverse,
    NaturalMapSuite,
    VolumePath,
    RigidityReport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::BarycenterSuite => "barycenter-suite",
            Self::PsiScan => "psi-scan",
            Self::PsiConverse => "psi-converse",
            Self::NaturalMapSuite => "natural-map-suite",
            Self::VolumePath => "volume-path",
            Self::RigidityReport => "rigidity-report",
        }
    }
}

/// Runs one suite with an already merged configuration.
pub fn run(command: Command, cfg: &ExperimentConfig) -> RunResult<Outcome> {
    cfg.validate()?;
    match command {
        Command::BarycenterSuite => suites::barycenter::run(cfg),
        Command::PsiScan => suites::psi::scan(cfg),
        Command::PsiConverse => suites::psi::converse(cfg),
        Command::NaturalMapSuite => suites::natural::run(cfg),
        Command::VolumePath => suites::volume::run(cfg),
        Command::RigidityReport => suites::rigidity::run(cfg),
    }
}
