//! Tail-dependence analytics: binned empirical χ and conditional
//! exceedance correlation, spline smoothing of binned surfaces, closed-form
//! limiting χ of the simplified mixture, and Monte Carlo references.

mod chi;
mod corr;
mod curve;
mod grid;
mod oracle;
mod smooth;
mod stats;
mod theorem;

pub(crate) use chi::csv_err;
pub use chi::{dataset_stats, empirical_chi, smooth_surface, smooth_surface_with, ChiSurface};
pub use corr::{conditional_exceedance_corr, CorrSurface, MIN_CORR_PAIRS};
pub use curve::model_chi_curve;
pub use grid::{PairBinGrid, PairIndex};
pub use oracle::{chi_mc_oracle, joint_survival_mc, joint_survival_mc_conditional, JointSurvivalMc};
pub use smooth::{smooth_values, DEFAULT_KAPPA};
pub use stats::{BinStats, ChiCounts, CorrSums};
pub use theorem::{theorem1_chi, PairCase, TheoremChiResult, POLE_TOL};
