use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numeric parameters shared by all subcommands. Every field is optional;
/// each suite fills the gaps with its own defaults. A JSON file may supply
/// any subset and command-line flags override it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub nodes: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub steps: Option<usize>,
    pub margin: Option<f64>,
    pub eps: Option<f64>,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    /// Triangulation JSON for `volume-path` and `rigidity-report`
    /// (the built-in figure-eight complement when absent).
    pub triangulation: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Parses a config document; `origin` names it in error messages.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            let message = e.to_string();
            // serde_json appends its own " at line L column C"
            let message = match message.rfind(" at line ") {
                Some(i) => message[..i].to_string(),
                None => message,
            };
            ConfigError::Parse { path: origin.to_string(), line: e.line(), column: e.column(), message }
        })
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overlay(self, flags: ExperimentConfig) -> Self {
        Self {
            k: flags.k.or(self.k),
            m: flags.m.or(self.m),
            nodes: flags.nodes.or(self.nodes),
            seed: flags.seed.or(self.seed),
            tol: flags.tol.or(self.tol),
            steps: flags.steps.or(self.steps),
            margin: flags.margin.or(self.margin),
            eps: flags.eps.or(self.eps),
            samples: flags.samples.or(self.samples),
            out: flags.out.or(self.out),
            triangulation: flags.triangulation.or(self.triangulation),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, reason: &str| Err(ConfigError::Invalid { field, reason: reason.to_string() });
        if let Some(k) = self.k {
            if !(2..=8).contains(&k) {
                return invalid("k", "dimension must lie in 2..=8");
            }
        }
        if let Some(m) = self.m {
            if m < self.k.unwrap_or(3) || m > 8 {
                return invalid("m", "target dimension must satisfy k ≤ m ≤ 8");
            }
        }
        if let Some(n) = self.nodes {
            if n < 8 {
                return invalid("nodes", "need at least 8 quadrature nodes");
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return invalid("tol", "tolerances must be positive");
            }
        }
        if let Some(s) = self.steps {
            if s == 0 {
                return invalid("steps", "need at least one step");
            }
        }
        if let Some(m) = self.margin {
            if !(m > 0.0 && m < 0.5) {
                return invalid("margin", "margin must lie in (0, 1/2)");
            }
        }
        if let Some(e) = self.eps {
            if !(0.0..=0.1).contains(&e) {
                return invalid("eps", "ε must lie in [0, 0.1]");
            }
        }
        if let Some(s) = self.samples {
            if s == 0 {
                return invalid("samples", "need at least one sample");
            }
        }
        Ok(())
    }
}
