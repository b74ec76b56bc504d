use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point is not inside the open unit ball (norm {0})")]
    OutsideBall(f64),

    #[error("boundary direction is not a unit vector (norm {0})")]
    NotUnit(f64),

    #[error("matrix does not preserve the Lorentz form and upper sheet (defect {0:e})")]
    NotLorentz(f64),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure is the sum of two Dirac masses of equal weight")]
    TwoEqualAtoms,

    #[error("barycenter solver hit {iterations} iterations with gradient norm {gradient_norm:e}")]
    NoConvergence {
        best: Vec<f64>,
        gradient_norm: f64,
        iterations: usize,
    },

    #[error("representation is elementary: {0}")]
    ElementaryRepresentation(String),

    #[error("K operator is ill-conditioned (smallest eigenvalue {0:e})")]
    IllConditionedK(f64),

    #[error("shape parameter {index} is at a pole of the tetrahedron volume ({value})")]
    PoleInput { index: usize, value: String },

    #[error("log branch is ambiguous in equation {equation} (|Im log| = {imag})")]
    BranchAmbiguity { equation: usize, imag: f64 },

    #[error("developing map failed: {0}")]
    DevelopingFailure(String),

    #[error("continuation stalled at t = {t} after {halvings} step halvings")]
    ContinuationStall { t: f64, halvings: usize },

    #[error("Newton solve failed: {0}")]
    NewtonFailure(String),

    #[error("invalid triangulation: {0}")]
    InvalidTriangulation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
