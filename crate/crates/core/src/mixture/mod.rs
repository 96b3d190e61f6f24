//! The four-regime mixture process: parameters and their unconstrained
//! coordinates, dataset container, simulation and marginal transforms.

mod dataset;
mod params;
mod simulate;
mod transform;

pub use dataset::Dataset;
pub use params::{eta_to_theta, theta_to_eta, EtaParams, MixtureParams};
pub use simulate::{simulate_mixture, MixtureSimulator, COMPONENTS};
pub use transform::{transform_margins, MarginTarget};
