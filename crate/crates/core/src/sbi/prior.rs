use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{eta_to_theta, EtaParams, MixtureParams};
use crate::rng;
use crate::taildep::{theorem1_chi, PairCase};

/// Attempts before [`sample_prior`] gives up.
pub const MAX_PRIOR_ATTEMPTS: usize = 100;

/// Independent normal prior on the five unconstrained coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub means: [f64; 5],
    pub sds: [f64; 5],
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            means: [0.0, 0.0, 0.0, 0.3f64.ln(), 0.3f64.ln()],
            sds: [1.0, 1.0, 1.0, 0.7, 0.7],
        }
    }
}

impl PriorSpec {
    pub fn new(means: [f64; 5], sds: [f64; 5]) -> Result<Self> {
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Prior("prior means must be finite".into()));
        }
        if sds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Prior(format!(
                "prior standard deviations must be positive: {sds:?}"
            )));
        }
        Ok(Self { means, sds })
    }
}

/// True when the parameters are usable by every downstream formula: the
/// weights pass the distinctness gate and avoid the closed-form poles.
pub fn admissible(eta: &EtaParams) -> Option<MixtureParams> {
    let p = eta_to_theta(eta).ok()?;
    PairCase::ALL
        .iter()
        .all(|&c| theorem1_chi(p.weights(), c).is_ok())
        .then_some(p)
}

/// One prior draw; inadmissible draws are redrawn from the same stream.
pub fn sample_prior(spec: &PriorSpec, seed: u64) -> Result<EtaParams> {
    let mut r = rng::stream(seed, &[]);
    for _ in 0..MAX_PRIOR_ATTEMPTS {
        let eta: [f64; 5] = std::array::from_fn(|j| spec.means[j] + spec.sds[j] * r.sample::<f64, _>(StandardNormal));
        let eta = EtaParams(eta);
        if admissible(&eta).is_some() {
            return Ok(eta);
        }
    }
    Err(Error::Prior(format!(
        "{MAX_PRIOR_ATTEMPTS} consecutive prior draws were rejected"
    )))
}
