//! Peaks-over-threshold marginal fit and probability integral transform.

use serde::{Deserialize, Serialize};

use exceedmix::distributions::{empirical_quantile, gpd_fit_shared_shape, GpdFitConfig, GpdParams, MarginalModel};
use exceedmix::mixture::Dataset;
use exceedmix::simulators::Margin;

use crate::error::{PipelineError, Result};

/// One point of the pooled QQ diagnostic: a site-standardized excess and
/// the matching quantile of the unit-scale GPD with the fitted shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub empirical: f64,
    pub theoretical: f64,
}

#[derive(Debug, Clone)]
pub struct MarginFit {
    pub model: MarginalModel,
    pub uniform: Dataset,
    pub qq: Vec<QqPoint>,
}

/// Fits per-site thresholds (empirical `tau` quantiles pooled over
/// replicates and times), a shared-shape GPD on the exceedances, and maps
/// every cell to (0, 1): exceedances through `tau + (1 − tau)·GPD-CDF`,
/// sub-threshold cells through their within-site mid-rank scaled into
/// `(0, tau)`.
pub fn fit_margins_and_pit(d: &Dataset, tau: f64, fit: &GpdFitConfig) -> Result<MarginFit> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(PipelineError::Config(format!(
            "marginal threshold level {tau} not in (0,1)"
        )));
    }
    let l = &d.layout;
    let (ns, nt) = (l.n_sites(), l.n_times());
    let site_values = |s: usize| -> Vec<(usize, f64)> {
        (0..l.replicates)
            .flat_map(|r| (0..nt).map(move |t| l.index(r, s, t)))
            .map(|i| (i, d.values[i]))
            .filter(|(_, v)| v.is_finite())
            .collect()
    };

    let mut thresholds = Vec::with_capacity(ns);
    let mut exceed = Vec::with_capacity(ns);
    for s in 0..ns {
        let vals: Vec<f64> = site_values(s).into_iter().map(|(_, v)| v).collect();
        let u = empirical_quantile(&vals, tau)?;
        exceed.push(vals.into_iter().filter(|&v| v > u).collect::<Vec<_>>());
        thresholds.push(u);
    }
    let mut model = gpd_fit_shared_shape(&exceed, &thresholds, fit)?;
    model.tau = tau;

    let mut out = vec![f64::NAN; d.values.len()];
    for s in 0..ns {
        let u = thresholds[s];
        let mut below: Vec<(usize, f64)> = site_values(s).into_iter().filter(|&(_, v)| v <= u).collect();
        below.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let m = below.len() as f64;
        let mut k = 0;
        while k < below.len() {
            let mut j = k;
            while j + 1 < below.len() && below[j + 1].1 == below[k].1 {
                j += 1;
            }
            // tied values share their mid-rank
            let rank = 0.5 * (k + j) as f64 + 0.5;
            for &(i, _) in &below[k..=j] {
                out[i] = tau * rank / m;
            }
            k = j + 1;
        }
        let g = model.site(s);
        for (i, v) in site_values(s) {
            if v > u {
                out[i] = tau + (1.0 - tau) * g.cdf(v);
            }
        }
    }
    let uniform = Dataset::new(l.clone(), out, Margin::Uniform)?;

    let mut std_excess: Vec<f64> = exceed
        .iter()
        .enumerate()
        .flat_map(|(s, e)| {
            let (u, sc) = (thresholds[s], model.scales[s]);
            e.iter().map(move |v| (v - u) / sc)
        })
        .collect();
    std_excess.sort_by(f64::total_cmp);
    let unit = GpdParams::new(0.0, 1.0, model.shape)?;
    let n = std_excess.len() as f64;
    let qq = std_excess
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            Ok(QqPoint {
                empirical: e,
                theoretical: unit.quantile((k as f64 + 0.5) / n)?,
            })
        })
        .collect::<exceedmix::Result<Vec<_>>>()?;

    Ok(MarginFit { model, uniform, qq })
}
