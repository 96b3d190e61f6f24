use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{nelder_mead, NelderMeadOptions};
use crate::error::{Error, Result};
use crate::rng;

/// Shapes closer to zero than this use the exponential limit.
pub const XI_ZERO_TOL: f64 = 1e-8;

/// Generalized Pareto distribution above `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub threshold: f64,
    pub scale: f64,
    pub shape: f64,
}

impl GpdParams {
    pub fn new(threshold: f64, scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter(format!("GPD scale must be positive, got {scale}")));
        }
        if !threshold.is_finite() || !shape.is_finite() {
            return Err(Error::Parameter("GPD threshold and shape must be finite".into()));
        }
        Ok(Self {
            threshold,
            scale,
            shape,
        })
    }

    /// Upper end point of the support (infinite unless shape < 0).
    pub fn upper_bound(&self) -> f64 {
        if self.shape < -XI_ZERO_TOL {
            self.threshold - self.scale / self.shape
        } else {
            f64::INFINITY
        }
    }

    /// Survival function P(Y > y).
    pub fn sf(&self, y: f64) -> f64 {
        if y <= self.threshold {
            return 1.0;
        }
        let z = (y - self.threshold) / self.scale;
        if self.shape.abs() < XI_ZERO_TOL {
            return (-z).exp();
        }
        let t = self.shape * z;
        if t <= -1.0 {
            return 0.0;
        }
        (-t.ln_1p() / self.shape).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= self.threshold {
            return 0.0;
        }
        let z = (y - self.threshold) / self.scale;
        if self.shape.abs() < XI_ZERO_TOL {
            return -(-z).exp_m1();
        }
        let t = self.shape * z;
        if t <= -1.0 {
            return 1.0;
        }
        -(-t.ln_1p() / self.shape).exp_m1()
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        if y < self.threshold {
            return f64::NEG_INFINITY;
        }
        let z = (y - self.threshold) / self.scale;
        if self.shape.abs() < XI_ZERO_TOL {
            return -self.scale.ln() - z;
        }
        let t = self.shape * z;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        -self.scale.ln() - (1.0 + 1.0 / self.shape) * t.ln_1p()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).exp()
    }

    /// Inverse CDF on [0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("GPD quantile level {u} not in [0,1)")));
        }
        let l = (-u).ln_1p(); // log(1-u)
        let excess = if self.shape.abs() < XI_ZERO_TOL {
            -l
        } else {
            (-self.shape * l).exp_m1() / self.shape
        };
        Ok(self.threshold + self.scale * excess)
    }

    /// Inverse survival function on (0, 1]; accurate deep in the tail.
    pub fn isf(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("GPD survival level {p} not in (0,1]")));
        }
        let l = p.ln();
        let excess = if self.shape.abs() < XI_ZERO_TOL {
            -l
        } else {
            (-self.shape * l).exp_m1() / self.shape
        };
        Ok(self.threshold + self.scale * excess)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u).expect("uniform draw lies in [0,1)")
    }

    /// Sum of log densities over `ys` (all assumed above the threshold).
    pub fn log_likelihood(&self, ys: &[f64]) -> f64 {
        ys.iter().map(|&y| self.log_pdf(y)).sum()
    }
}

/// Marginal model: per-site threshold and scale with one shared shape.
///
/// `tau` is the non-exceedance probability at the threshold, so the full
/// marginal CDF above the threshold is `tau + (1 - tau) * GPD-CDF`. A model
/// describing the whole distribution (threshold at the lower end point) has
/// `tau = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalModel {
    pub thresholds: Vec<f64>,
    pub scales: Vec<f64>,
    pub shape: f64,
    pub tau: f64,
    pub log_likelihood: f64,
}

impl MarginalModel {
    /// Model with identical GPD margins at `sites` sites and `tau = 0`.
    pub fn homogeneous(sites: usize, p: GpdParams) -> Self {
        Self {
            thresholds: vec![p.threshold; sites],
            scales: vec![p.scale; sites],
            shape: p.shape,
            tau: 0.0,
            log_likelihood: f64::NAN,
        }
    }

    pub fn sites(&self) -> usize {
        self.thresholds.len()
    }

    pub fn site(&self, s: usize) -> GpdParams {
        GpdParams {
            threshold: self.thresholds[s],
            scale: self.scales[s],
            shape: self.shape,
        }
    }

    /// Marginal CDF at site `s`. Above the threshold this is
    /// `tau + (1 - tau)·GPD-CDF`; below it the model says nothing, and the
    /// continuation `tau·exp{(y - u)/σ}` keeps the map strictly increasing.
    pub fn cdf(&self, s: usize, y: f64) -> f64 {
        let g = self.site(s);
        if y >= g.threshold {
            self.tau + (1.0 - self.tau) * g.cdf(y)
        } else {
            self.tau * ((y - g.threshold) / g.scale).exp()
        }
    }

    /// Inverse of [`MarginalModel::cdf`] given the survival probability
    /// `1 - u`, which keeps precision far in the upper tail.
    pub fn value_at_survival(&self, s: usize, sf: f64) -> Result<f64> {
        if !(sf > 0.0 && sf <= 1.0) {
            return Err(Error::Domain(format!("survival level {sf} not in (0,1]")));
        }
        let g = self.site(s);
        let above = 1.0 - self.tau;
        if sf <= above {
            g.isf(sf / above)
        } else {
            Ok(g.threshold + g.scale * ((1.0 - sf) / self.tau).ln())
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpdFitConfig {
    pub min_exceedances: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for GpdFitConfig {
    fn default() -> Self {
        Self {
            min_exceedances: 10,
            restarts: 20,
            max_iter: 500,
            seed: 0x6770_6466,
        }
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v)
}

/// Log-likelihood of excesses (values minus threshold) for one site.
fn site_loglik(excess: &[f64], scale: f64, shape: f64) -> f64 {
    if !(scale > 0.0) {
        return f64::NEG_INFINITY;
    }
    let n = excess.len() as f64;
    if shape.abs() < XI_ZERO_TOL {
        return -n * scale.ln() - excess.iter().sum::<f64>() / scale;
    }
    let mut acc = 0.0;
    for &e in excess {
        let t = shape * e / scale;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        acc += t.ln_1p();
    }
    -n * scale.ln() - (1.0 + 1.0 / shape) * acc
}

/// Derivative of the site log-likelihood in log σ, and its second derivative.
fn score_log_scale(excess: &[f64], scale: f64, shape: f64) -> (f64, f64) {
    let (mut g, mut h) = (0.0, 0.0);
    for &e in excess {
        let a = e / scale;
        let d = 1.0 + shape * a;
        g += a / d;
        h += a / (d * d);
    }
    (-(excess.len() as f64) + (1.0 + shape) * g, -(1.0 + shape) * h)
}

/// Profile: best scale for one site at fixed shape.
///
/// The log-likelihood is concave in log σ for ξ > -1, so a safeguarded
/// Newton iteration on the score converges from any bracket.
fn profile_scale(excess: &[f64], shape: f64, init: f64) -> (f64, f64) {
    let max_e = excess.iter().copied().fold(0.0, f64::max);
    // ξ < 0 needs σ > -ξ·max excess
    let floor = if shape < 0.0 {
        -shape * max_e * (1.0 + 1e-12)
    } else {
        0.0
    };
    if shape <= -1.0 {
        // likelihood increases towards the support floor
        let s = floor.max(1e-300);
        return (s, site_loglik(excess, s, shape));
    }
    let mut lo = (init * 1e-3).max(floor).max(1e-300).ln();
    let mut hi = (init * 1e3).max(floor * 10.0).ln();
    if score_log_scale(excess, lo.exp(), shape).0 <= 0.0 {
        let s = lo.exp();
        return (s, site_loglik(excess, s, shape));
    }
    while score_log_scale(excess, hi.exp(), shape).0 > 0.0 {
        lo = hi;
        hi += 5.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (g, h) = score_log_scale(excess, x.exp(), shape);
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - g / h;
        let next = if h < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - x).abs() < 1e-13 * (1.0 + x.abs()) || hi - lo < 1e-13;
        x = next;
        if done {
            break;
        }
    }
    let s = x.exp();
    (s, site_loglik(excess, s, shape))
}

/// Maximum likelihood fit of per-site GPD scales and one shared shape.
///
/// `data[s]` holds the values above `thresholds[s]` at site `s`. Scales are
/// profiled out site by site, and the shared shape is found by simplex
/// search over the profile log-likelihood from `cfg.restarts` starting
/// points around the pooled moment estimate.
pub fn gpd_fit_shared_shape(data: &[Vec<f64>], thresholds: &[f64], cfg: &GpdFitConfig) -> Result<MarginalModel> {
    if data.len() != thresholds.len() {
        return Err(Error::Data(format!(
            "{} exceedance lists but {} thresholds",
            data.len(),
            thresholds.len()
        )));
    }
    if data.is_empty() {
        return Err(Error::Data("no sites to fit".into()));
    }
    let mut excesses = Vec::with_capacity(data.len());
    for (s, (ys, &u)) in data.iter().zip(thresholds).enumerate() {
        let e: Vec<f64> = ys.iter().filter(|y| y.is_finite()).map(|y| y - u).collect();
        if e.len() < cfg.min_exceedances {
            return Err(Error::Data(format!(
                "site {s} has {} exceedances, need at least {}",
                e.len(),
                cfg.min_exceedances
            )));
        }
        if e.iter().any(|&x| x < 0.0) {
            return Err(Error::Data(format!("site {s} has values below its threshold")));
        }
        excesses.push(e);
    }

    let pooled: Vec<f64> = excesses.iter().flatten().copied().collect();
    let (m, v) = mean_var(&pooled);
    let xi0 = if v > 0.0 {
        (0.5 * (1.0 - m * m / v)).clamp(-0.45, 0.9)
    } else {
        0.0
    };
    let scale_init: Vec<f64> = excesses
        .iter()
        .map(|e| {
            let (ms, vs) = mean_var(e);
            let s = if vs > 0.0 { 0.5 * ms * (ms * ms / vs + 1.0) } else { ms };
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();

    let profile = |xi: f64| -> f64 {
        if !(-1.0..=5.0).contains(&xi) {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        for (e, &s0) in excesses.iter().zip(&scale_init) {
            total += profile_scale(e, xi, s0).1;
        }
        -total
    };

    let mut rng = rng::stream(cfg.seed, &[]);
    let opts = NelderMeadOptions {
        max_iter: cfg.max_iter,
        f_tol: 1e-10,
        x_tol: 1e-8,
        initial_step: 0.05,
    };
    let mut best: Option<(f64, f64, bool)> = None;
    for r in 0..cfg.restarts.max(1) {
        let start = if r == 0 {
            xi0
        } else {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            (xi0 + 0.25 * z).clamp(-0.9, 2.0)
        };
        let res = nelder_mead(|x| profile(x[0]), &[start], &opts);
        let better = match best {
            None => true,
            Some((_, bv, _)) => res.value < bv,
        };
        if better {
            best = Some((res.x[0], res.value, res.converged));
        }
    }
    let (xi, neg_ll, converged) = best.expect("at least one restart");
    if !converged || !neg_ll.is_finite() {
        let scales = excesses
            .iter()
            .zip(&scale_init)
            .map(|(e, &s0)| profile_scale(e, xi, s0).0);
        let mut best_iter: Vec<f64> = vec![xi];
        best_iter.extend(scales);
        return Err(Error::Fit {
            message: "shape search did not converge".into(),
            best: best_iter,
            log_likelihood: -neg_ll,
        });
    }
    let scales: Vec<f64> = excesses
        .iter()
        .zip(&scale_init)
        .map(|(e, &s0)| profile_scale(e, xi, s0).0)
        .collect();
    let log_likelihood = excesses.iter().zip(&scales).map(|(e, &s)| site_loglik(e, s, xi)).sum();
    Ok(MarginalModel {
        thresholds: thresholds.to_vec(),
        scales,
        shape: xi,
        tau: 0.0,
        log_likelihood,
    })
}
