use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum pairwise separation of hypoexponential weights.
pub const DEFAULT_MIN_GAP: f64 = 1e-6;

/// Law of `Σ λ_k E_k` for independent standard exponentials `E_k` and four
/// distinct weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypoexpParams {
    weights: [f64; 4],
    min_gap: f64,
}

fn check_weights(w: &[f64], min_gap: f64) -> Result<()> {
    for (i, &l) in w.iter().enumerate() {
        if !l.is_finite() || l < min_gap {
            return Err(Error::Parameter(format!(
                "weight {} = {l} must be at least {min_gap}",
                i + 1
            )));
        }
    }
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            if (w[i] - w[j]).abs() < min_gap {
                return Err(Error::Parameter(format!(
                    "weights {} and {} ({} and {}) closer than {min_gap}",
                    i + 1,
                    j + 1,
                    w[i],
                    w[j]
                )));
            }
        }
    }
    Ok(())
}

/// `Σ_j e^{-x/λ_j} Π_{k≠j} λ_j/(λ_j−λ_k)` with differences clamped away
/// from zero at `min_gap`.
fn survival_general(w: &[f64], x: f64, min_gap: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for (j, &lj) in w.iter().enumerate() {
        let mut coef = 1.0;
        for (k, &lk) in w.iter().enumerate() {
            if k != j {
                coef *= lj / clamp_gap(lj - lk, min_gap);
            }
        }
        s += coef * (-x / lj).exp();
    }
    s.clamp(0.0, 1.0)
}

fn clamp_gap(d: f64, min_gap: f64) -> f64 {
    if d.abs() < min_gap {
        min_gap.copysign(d)
    } else {
        d
    }
}

impl HypoexpParams {
    pub fn new(weights: [f64; 4]) -> Result<Self> {
        Self::with_min_gap(weights, DEFAULT_MIN_GAP)
    }

    pub fn with_min_gap(weights: [f64; 4], min_gap: f64) -> Result<Self> {
        check_weights(&weights, min_gap)?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { weights, min_gap })
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    /// Zero-based index of the largest weight.
    pub fn dominant_index(&self) -> usize {
        argmax(&self.weights)
    }

    /// Coefficient of `e^{-x/λ_j}` in the survival function.
    pub fn survival_coefficients(&self) -> [f64; 4] {
        let w = self.weights;
        let mut c = [0.0; 4];
        for j in 0..4 {
            c[j] = (0..4)
                .filter(|&k| k != j)
                .map(|k| w[j] / clamp_gap(w[j] - w[k], self.min_gap))
                .product();
        }
        c
    }

    pub fn sf(&self, x: f64) -> f64 {
        survival_general(&self.weights, x, self.min_gap)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            1.0 - self.sf(x)
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let c = self.survival_coefficients();
        self.weights
            .iter()
            .zip(c)
            .map(|(&l, c)| c / l * (-x / l).exp())
            .sum::<f64>()
            .max(0.0)
    }

    /// Inverse CDF by safeguarded Newton iteration on the survival function.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("quantile level {u} not in [0,1)")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        let target = 1.0 - u;
        let lmax = self.weights.iter().copied().fold(0.0, f64::max);
        let mut lo = 0.0;
        // the sum stochastically dominates λ_max·E, so this is a lower bound
        let mut hi = lmax * -target.ln();
        while self.sf(hi) > target {
            lo = hi;
            hi = 2.0 * hi + 1.0;
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.sf(x) - target;
            if f > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.pdf(x);
            let mut next = if d > 0.0 { x + f / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-15 * hi {
                x = next;
                break;
            }
            x = next;
        }
        Ok(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.weights.iter().map(|&l| l * rng.sample::<f64, _>(Exp1)).sum()
    }
}

pub(crate) fn argmax(w: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in w.iter().enumerate() {
        if v > w[best] {
            best = i;
        }
    }
    best
}

/// Survival function of a hypoexponential sum with 2, 3 or 4 distinct
/// weights (not required to sum to one).
pub fn hypoexp_survival_k(weights: &[f64], x: f64) -> Result<f64> {
    if !(2..=4).contains(&weights.len()) {
        return Err(Error::Parameter(format!(
            "expected 2 to 4 weights, got {}",
            weights.len()
        )));
    }
    check_weights(weights, DEFAULT_MIN_GAP)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    let e = |l: f64| (-x / l).exp();
    let s = match *weights {
        [a, b] => a / (a - b) * e(a) - b / (a - b) * e(b),
        [a, b, c] => {
            a * a * e(a) / ((a - b) * (a - c)) - b * b * e(b) / ((a - b) * (b - c)) + c * c * e(c) / ((a - c) * (b - c))
        }
        _ => survival_general(weights, x, DEFAULT_MIN_GAP),
    };
    Ok(s.clamp(0.0, 1.0))
}
