//! One module per subcommand. Every suite is deterministic given its
//! configuration: parallel work is collected in index order.

pub mod barycenter;
pub mod natural;
pub mod psi;
pub mod rigidity;
pub mod volume;

use hyperrigid::triangulation::IdealTriangulation;

use crate::{ExperimentConfig, RunError, RunResult};

pub(crate) fn triangulation(cfg: &ExperimentConfig) -> RunResult<IdealTriangulation> {
    match &cfg.triangulation {
        None => Ok(IdealTriangulation::figure_eight()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| RunError::Io { path: path.display().to_string(), source })?;
            Ok(IdealTriangulation::from_json(&text)?)
        }
    }
}
