//! Monte Carlo references for the closed-form results.

use rand::Rng;
use rand_distr::Exp1;

use super::theorem::PairCase;
use crate::distributions::{hypoexp_survival_k, HypoexpParams};
use crate::error::Result;
use crate::exec::Exec;
use crate::rng;

/// Samples per independently seeded block.
const BLOCK: usize = 1 << 20;

/// Pair of simplified-model values; shared components are drawn once.
#[inline]
fn draw_pair<R: Rng>(r: &mut R, lambda: &[f64; 4], shared: [bool; 4]) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for k in 0..4 {
        let e: f64 = r.sample(Exp1);
        a += lambda[k] * e;
        if shared[k] {
            b += lambda[k] * e;
        } else {
            let e2: f64 = r.sample(Exp1);
            b += lambda[k] * e2;
        }
    }
    (a, b)
}

fn shared_mask(case: PairCase) -> [bool; 4] {
    let mut m = [false; 4];
    for &i in case.shared() {
        m[i] = true;
    }
    m
}

/// Block sizes covering `n` samples.
fn blocks(n: usize) -> Vec<usize> {
    let mut v = vec![BLOCK; n / BLOCK];
    if n % BLOCK > 0 {
        v.push(n % BLOCK);
    }
    v
}

/// Empirical χ at level `tau` of the simplified model, thresholding each
/// member at the exact hypoexponential `tau`-quantile. Block `b` draws from
/// the stream `(seed, [b])`, and integer counts make the result independent
/// of the schedule.
pub fn chi_mc_oracle(lambda: [f64; 4], case: PairCase, tau: f64, n: usize, seed: u64, exec: Exec) -> Result<f64> {
    let q = HypoexpParams::new(lambda)?.quantile(tau)?;
    let mask = shared_mask(case);
    let sizes = blocks(n);
    let counts = exec.map(sizes.len(), |b| {
        let mut r = rng::stream(seed, &[b as u64]);
        let (mut both, mut exc) = (0u64, 0u64);
        for _ in 0..sizes[b] {
            let (x, y) = draw_pair(&mut r, &lambda, mask);
            let (ex, ey) = (x > q, y > q);
            exc += ex as u64 + ey as u64;
            both += (ex && ey) as u64;
        }
        (both, exc)
    });
    let (both, exc) = counts.iter().fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    Ok(if exc == 0 { 0.0 } else { 2.0 * both as f64 / exc as f64 })
}

/// Monte Carlo estimate of a joint survival probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSurvivalMc {
    pub y: f64,
    pub estimate: f64,
    /// Standard error of `estimate` itself.
    pub std_error: f64,
    /// Standard error an indicator estimate with the same number of draws
    /// would have, `√(p(1−p)/n)` at `p = estimate`.
    pub binomial_sigma: f64,
}

impl JointSurvivalMc {
    fn new(y: f64, n: usize, sum: f64, sum_sq: f64) -> Self {
        let nf = n as f64;
        let p = sum / nf;
        let var = (sum_sq / nf - p * p).max(0.0);
        Self {
            y,
            estimate: p,
            std_error: (var / nf).sqrt(),
            binomial_sigma: (p * (1.0 - p) / nf).sqrt(),
        }
    }
}

/// Indicator estimate of `P(X₁ > y, X₂ > y)` at each `y`.
pub fn joint_survival_mc(
    lambda: [f64; 4],
    case: PairCase,
    ys: &[f64],
    n: usize,
    seed: u64,
    exec: Exec,
) -> Vec<JointSurvivalMc> {
    let mask = shared_mask(case);
    let sizes = blocks(n);
    let counts = exec.map(sizes.len(), |b| {
        let mut r = rng::stream(seed, &[b as u64]);
        let mut c = vec![0u64; ys.len()];
        for _ in 0..sizes[b] {
            let (x, y) = draw_pair(&mut r, &lambda, mask);
            let m = x.min(y);
            for (k, &yy) in ys.iter().enumerate() {
                c[k] += (m > yy) as u64;
            }
        }
        c
    });
    (0..ys.len())
        .map(|k| {
            let hits = counts.iter().map(|c| c[k]).sum::<u64>() as f64;
            JointSurvivalMc::new(ys[k], n, hits, hits)
        })
        .collect()
}

/// Conditional Monte Carlo estimate of `P(X₁ > y, X₂ > y)`: draws only the
/// shared sum `S` and averages `P(T > y − S)²`, with `T` the independent
/// part of one member. Unbiased, and far less variable than the indicator.
pub fn joint_survival_mc_conditional(
    lambda: [f64; 4],
    case: PairCase,
    ys: &[f64],
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<JointSurvivalMc>> {
    let shared: Vec<f64> = case.shared().iter().map(|&i| lambda[i]).collect();
    let indep: Vec<f64> = (0..4)
        .filter(|i| !case.shared().contains(i))
        .map(|i| lambda[i])
        .collect();
    // validates distinctness once; coefficients then drive a fast loop
    hypoexp_survival_k(&indep, 1.0)?;
    let coefs: Vec<(f64, f64)> = indep
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let c: f64 = indep
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, &b)| a / (a - b))
                .product();
            (c, 1.0 / a)
        })
        .collect();
    let sf_t = |x: f64| -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            coefs
                .iter()
                .map(|&(c, r)| c * (-r * x).exp())
                .sum::<f64>()
                .clamp(0.0, 1.0)
        }
    };
    let sizes = blocks(n);
    let sums = exec.map(sizes.len(), |b| {
        let mut r = rng::stream(seed, &[b as u64]);
        let mut acc = vec![(0.0f64, 0.0f64); ys.len()];
        for _ in 0..sizes[b] {
            let s: f64 = shared.iter().map(|&w| w * r.sample::<f64, _>(Exp1)).sum();
            for (k, &y) in ys.iter().enumerate() {
                let v = if s > y { 1.0 } else { sf_t(y - s).powi(2) };
                acc[k].0 += v;
                acc[k].1 += v * v;
            }
        }
        acc
    });
    Ok((0..ys.len())
        .map(|k| {
            let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b[k].0, a.1 + b[k].1));
            JointSurvivalMc::new(ys[k], n, s, s2)
        })
        .collect())
}
