//! Simulation-based inference: prior draws in η-space, training campaigns,
//! summary statistics, per-coordinate regression forests, point estimates
//! and replicate bootstrap intervals.

mod campaign;
mod estimate;
mod features;
mod forest;
mod forest_set;
mod prior;

pub use campaign::{run_campaign, TrainingSet, MAX_ROW_ATTEMPTS, MIN_CAMPAIGN_ROWS};
pub use estimate::{
    bootstrap_ci, estimate, CiConvention, EstimateWithCI, MAX_RESAMPLE_ATTEMPTS, MIN_BOOTSTRAP_REPLICATES,
};
pub use features::{featurize, FeatureConfig, FeatureVector, Featurizer};
pub use forest::{train_forest, ForestConfig, ForestMeta, ForestModel, Node, Tree};
pub use forest_set::{train_forest_set, ForestSet, ForestSidecar};
pub use prior::{admissible, sample_prior, PriorSpec, MAX_PRIOR_ATTEMPTS};
