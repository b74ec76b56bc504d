//! Hyperbolic geometry toolkit for barycentric (natural) maps between
//! hyperbolic manifolds: Busemann calculus, visual measures and their
//! barycenters, the spectral inequality behind the Jacobian bound, natural maps
//! between representations, and ideal-triangulation volumes.

pub mod barycenter;
pub mod dilog;
pub mod error;
pub mod holonomy;
pub mod hyperbolic;
pub mod measure;
pub mod natural;
pub mod quadrature;
pub mod spd;
pub mod spin;
pub mod triangulation;
pub mod volume;

pub use error::{Error, Result};
