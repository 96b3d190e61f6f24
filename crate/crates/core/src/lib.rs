//! Spatiotemporal exceedance mixture model.
//!
//! The latent process is a convex combination of four unit-exponential
//! processes with different tail-dependence regimes (dependent in space and
//! time, in space only, in time only, and asymptotically independent).
//! This crate provides the distribution kernels, exact process simulators,
//! tail-dependence analytics and a random-forest simulation-based
//! inference engine with bootstrap uncertainty quantification.

pub mod distributions;
pub mod error;
pub mod exec;
pub mod mixture;
pub mod rng;
pub mod sbi;
pub mod simulators;
pub mod taildep;

pub use error::{Error, Result};
pub use exec::Exec;
