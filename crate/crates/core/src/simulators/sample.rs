use serde::{Deserialize, Serialize};

use super::layout::SpaceTimeLayout;
use crate::error::{Error, Result};

/// Marginal law of the values in a sample or dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Margin {
    Gaussian,
    UnitFrechet,
    StandardExponential,
    StandardPareto,
    Uniform,
    /// Hypoexponential with the given weights.
    Hypoexponential([f64; 4]),
    /// Fitted or prescribed marginal model (see `MarginalModel`).
    Gpd,
    /// Observed data with unknown margins.
    Raw,
}

impl Margin {
    pub fn name(&self) -> &'static str {
        match self {
            Margin::Gaussian => "gaussian",
            Margin::UnitFrechet => "unit-frechet",
            Margin::StandardExponential => "standard-exponential",
            Margin::StandardPareto => "standard-pareto",
            Margin::Uniform => "uniform",
            Margin::Hypoexponential(_) => "hypoexponential",
            Margin::Gpd => "gpd",
            Margin::Raw => "raw",
        }
    }
}

/// Replicate × site × time array produced by a simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSample {
    pub layout: SpaceTimeLayout,
    pub values: Vec<f64>,
    pub margin: Margin,
}

impl ProcessSample {
    pub fn get(&self, r: usize, s: usize, t: usize) -> f64 {
        self.values[self.layout.index(r, s, t)]
    }
}

/// Unit-Fréchet `z ↦ −log(1 − e^{−1/z})`, standard Pareto `w ↦ log w`.
/// Both maps are increasing, so upper tails stay upper tails.
pub fn to_standard_exponential(p: &ProcessSample) -> Result<ProcessSample> {
    let f: fn(f64) -> f64 = match p.margin {
        Margin::UnitFrechet => frechet_to_exp,
        Margin::StandardPareto => f64::ln,
        other => {
            return Err(Error::Margin {
                expected: "unit-frechet or standard-pareto".into(),
                found: other.name().into(),
            })
        }
    };
    Ok(ProcessSample {
        layout: p.layout.clone(),
        values: p.values.iter().map(|&v| f(v)).collect(),
        margin: Margin::StandardExponential,
    })
}

pub(crate) fn frechet_to_exp(z: f64) -> f64 {
    -(-(-1.0 / z).exp_m1()).ln()
}
