use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::Featurizer;
use super::forest_set::ForestSet;
use crate::distributions::argmax;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mixture::{eta_to_theta, Dataset, EtaParams, MixtureParams};
use crate::rng;
use crate::taildep::BinStats;

/// Fewest replicates accepted by [`bootstrap_ci`].
pub const MIN_BOOTSTRAP_REPLICATES: usize = 20;
/// Redraws allowed for a degenerate or failing resample.
pub const MAX_RESAMPLE_ATTEMPTS: u64 = 10;

/// Point estimate: featurize, predict each η coordinate, map back to θ.
pub fn estimate(fs: &ForestSet, d: &Dataset) -> Result<MixtureParams> {
    let fz = Featurizer::new(&fs.features, &d.layout)?;
    eta_to_theta(&EtaParams(fs.predict_eta(&fz.featurize(d)?)?))
}

/// How percentile intervals treat the original estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CiConvention {
    /// Percentiles of the resample estimates together with the original
    /// estimate; the interval always contains the point estimate.
    #[default]
    IncludeOriginal,
    /// Percentiles of the resample estimates alone.
    BootstrapOnly,
}

/// θ̂ with 95% percentile intervals over `(λ₁..λ₄, ρ_S, ρ_T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub estimate: MixtureParams,
    pub lower: [f64; 6],
    pub upper: [f64; 6],
    pub replicates: usize,
    /// Fraction of resamples in which each λ_k is the largest weight.
    pub vote_share: [f64; 4],
    pub convention: CiConvention,
    /// Resample estimates in resample order.
    pub resamples: Vec<[f64; 6]>,
}

/// Linear-interpolation sample quantile of sorted data.
fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let h = p * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn resample(fs: &ForestSet, fz: &Featurizer, stats: &[BinStats], seed: u64, k: u64) -> Result<[f64; 6]> {
    let n = stats.len();
    let mut last = None;
    for a in 0..MAX_RESAMPLE_ATTEMPTS {
        let mut r = rng::stream(seed, &[k, a]);
        let idx: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
        if idx.iter().all(|&i| i == idx[0]) {
            log::warn!("bootstrap resample {k}, attempt {a}: all replicates identical; redrawing");
            continue;
        }
        let attempt = || -> Result<[f64; 6]> {
            let z = fz.from_stats(&fz.pool(stats, idx.iter().copied()))?;
            Ok(eta_to_theta(&EtaParams(fs.predict_eta(&z)?))?.to_array())
        };
        match attempt() {
            Ok(t) => return Ok(t),
            Err(e) => {
                log::warn!("bootstrap resample {k}, attempt {a}: {e}; redrawing");
                last = Some(e);
            }
        }
    }
    Err(last.unwrap_or_else(|| Error::Numerical(format!("bootstrap resample {k} stayed degenerate"))))
}

/// Nonparametric bootstrap over replicates. Each resample is
/// re-featurized, re-predicted and mapped to θ before the percentiles are
/// taken. Resample `k` depends only on `(seed, k)`.
pub fn bootstrap_ci(
    fs: &ForestSet,
    d: &Dataset,
    b: usize,
    seed: u64,
    exec: Exec,
    convention: CiConvention,
) -> Result<EstimateWithCI> {
    let n = d.replicates();
    if n < MIN_BOOTSTRAP_REPLICATES {
        return Err(Error::Data(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_REPLICATES} replicates, got {n}"
        )));
    }
    if b == 0 {
        return Err(Error::Parameter("bootstrap needs at least one resample".into()));
    }
    let fz = Featurizer::new(&fs.features, &d.layout)?;
    let stats = fz.replicate_stats(d)?;
    let point = eta_to_theta(&EtaParams(fs.predict_eta(&fz.from_stats(&fz.pool(&stats, 0..n))?)?))?;
    let theta = point.to_array();

    let resamples = exec.try_map(b, |k| resample(fs, &fz, &stats, seed, k as u64))?;

    let mut votes = [0usize; 4];
    for t in &resamples {
        votes[argmax(&t[..4])] += 1;
    }
    let vote_share = votes.map(|v| v as f64 / b as f64);

    let mut lower = [0.0; 6];
    let mut upper = [0.0; 6];
    for c in 0..6 {
        let mut v: Vec<f64> = resamples.iter().map(|t| t[c]).collect();
        if convention == CiConvention::IncludeOriginal {
            v.push(theta[c]);
        }
        v.sort_by(f64::total_cmp);
        lower[c] = quantile_sorted(&v, 0.025);
        upper[c] = quantile_sorted(&v, 0.975);
        if convention == CiConvention::IncludeOriginal {
            lower[c] = lower[c].min(theta[c]);
            upper[c] = upper[c].max(theta[c]);
        }
    }
    Ok(EstimateWithCI {
        estimate: point,
        lower,
        upper,
        replicates: b,
        vote_share,
        convention,
        resamples,
    })
}
