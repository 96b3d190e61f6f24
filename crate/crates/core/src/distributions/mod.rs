//! Univariate distribution kernels: generalized Pareto, hypoexponential and
//! the empirical quantile used throughout preprocessing and diagnostics.

mod gpd;
mod hypoexp;
mod nelder_mead;
mod quantile;

pub use gpd::{gpd_fit_shared_shape, GpdFitConfig, GpdParams, MarginalModel, XI_ZERO_TOL};
pub(crate) use hypoexp::argmax;
pub use hypoexp::{hypoexp_survival_k, HypoexpParams, DEFAULT_MIN_GAP};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use quantile::empirical_quantile;
