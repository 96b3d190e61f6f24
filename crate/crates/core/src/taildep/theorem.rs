//! Closed-form joint survival and limiting χ of the simplified mixture
//! `X = λ₁R₁ + λ₂R₂(t) + λ₃R₃(s) + λ₄R₄(s,t)` with standard exponential
//! components.
//!
//! For a pair of locations the components split into a shared sum `S`
//! (densities `Σ αᵢ e^{-s/νᵢ}`) and two independent copies of a sum `T`
//! (survival `Σ a_k e^{-x/μ_k}`), and
//!
//! ```text
//! P(X₁>y, X₂>y) = P(S>y) + ∫₀^y f_S(s) P(T>y−s)² ds
//!   = Σᵢ e^{-y/νᵢ} [sᵢ + Σ_kl αᵢ a_k a_l / (b_kl − 1/νᵢ)]
//!     − Σ_kl e^{-y b_kl} Σᵢ αᵢ a_k a_l / (b_kl − 1/νᵢ),   b_kl = 1/μ_k + 1/μ_l.
//! ```

use serde::{Deserialize, Serialize};

use crate::distributions::argmax;
use crate::error::{Error, Result};

/// Denominators closer to zero than this are reported as poles.
pub const POLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairCase {
    /// Different sites, same time: shares λ₁ and λ₂.
    Spatial,
    /// Same site, different times: shares λ₁ and λ₃.
    Temporal,
    /// Different sites and times: shares λ₁ only.
    SpaceTime,
}

impl PairCase {
    pub const ALL: [PairCase; 3] = [PairCase::Spatial, PairCase::Temporal, PairCase::SpaceTime];

    /// Zero-based indices of the components both locations share.
    pub fn shared(self) -> &'static [usize] {
        match self {
            PairCase::Spatial => &[0, 1],
            PairCase::Temporal => &[0, 2],
            PairCase::SpaceTime => &[0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PairCase::Spatial => "spatial",
            PairCase::Temporal => "temporal",
            PairCase::SpaceTime => "spacetime",
        }
    }

    /// Asymptotic dependence holds exactly when the largest weight belongs
    /// to a shared component.
    pub fn dependent_when_dominant(self, j: usize) -> bool {
        self.shared().contains(&j)
    }
}

impl std::str::FromStr for PairCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spatial" => Ok(PairCase::Spatial),
            "temporal" => Ok(PairCase::Temporal),
            "spacetime" | "spatiotemporal" => Ok(PairCase::SpaceTime),
            other => Err(Error::Parameter(format!(
                "unknown case {other:?}; expected spatial, temporal or spacetime"
            ))),
        }
    }
}

/// Joint survival `Σ cᵢ e^{-rᵢ y}` of a pair and its limiting χ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremChiResult {
    pub case: PairCase,
    pub lambda: [f64; 4],
    /// `c₁, c₂, …` in the order of `rates`: one term per shared component,
    /// then `2/λ_k` for each independent component, then `1/λ_k + 1/λ_l`
    /// for each independent pair `k < l`.
    pub coefficients: Vec<f64>,
    pub rates: Vec<f64>,
    /// Zero-based index of the largest weight.
    pub dominant: usize,
    pub chi: f64,
}

impl TheoremChiResult {
    pub fn joint_survival(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.coefficients.iter().sum();
        }
        self.coefficients
            .iter()
            .zip(&self.rates)
            .map(|(c, r)| c * (-r * y).exp())
            .sum()
    }
}

fn label(i: usize) -> String {
    format!("λ{}", i + 1)
}

fn check(value: f64, what: impl FnOnce() -> String) -> Result<()> {
    if value.abs() < POLE_TOL {
        Err(Error::Parameter(format!(
            "weights within {POLE_TOL} of the pole {} = 0",
            what()
        )))
    } else {
        Ok(())
    }
}

/// Survival coefficients `Π_{k≠i} wᵢ/(wᵢ − w_k)` of a hypoexponential sum.
fn survival_coefs(w: &[f64]) -> Vec<f64> {
    (0..w.len())
        .map(|i| (0..w.len()).filter(|&k| k != i).map(|k| w[i] / (w[i] - w[k])).product())
        .collect()
}

fn check_poles(l: &[f64; 4], shared: &[usize], indep: &[usize]) -> Result<()> {
    for i in 0..4 {
        for k in i + 1..4 {
            check(l[i] - l[k], || format!("{} − {}", label(i), label(k)))?;
        }
    }
    for &i in shared {
        for (x, &k) in indep.iter().enumerate() {
            check(2.0 * l[i] - l[k], || format!("2{} − {}", label(i), label(k)))?;
            for &m in &indep[x + 1..] {
                check(l[i] * l[k] + l[i] * l[m] - l[k] * l[m], || {
                    format!("{i}{k} + {i}{m} − {k}{m}", i = label(i), k = label(k), m = label(m))
                })?;
            }
        }
    }
    Ok(())
}

fn joint_terms(l: &[f64; 4], shared: &[usize], indep: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let nu: Vec<f64> = shared.iter().map(|&i| l[i]).collect();
    let mu: Vec<f64> = indep.iter().map(|&k| l[k]).collect();
    let s = survival_coefs(&nu);
    let alpha: Vec<f64> = s.iter().zip(&nu).map(|(s, n)| s / n).collect();
    let a = survival_coefs(&mu);

    // (k, l, multiplicity): squares first, then cross terms k < l
    let mut pairs: Vec<(usize, usize, f64)> = (0..mu.len()).map(|k| (k, k, 1.0)).collect();
    for k in 0..mu.len() {
        for m in k + 1..mu.len() {
            pairs.push((k, m, 2.0));
        }
    }
    let mut coefs = Vec::with_capacity(nu.len() + pairs.len());
    let mut rates = Vec::with_capacity(nu.len() + pairs.len());
    for i in 0..nu.len() {
        let mut c = s[i];
        for &(k, m, mult) in &pairs {
            let b = 1.0 / mu[k] + 1.0 / mu[m];
            c += mult * alpha[i] * a[k] * a[m] / (b - 1.0 / nu[i]);
        }
        coefs.push(c);
        rates.push(1.0 / nu[i]);
    }
    for &(k, m, mult) in &pairs {
        let b = 1.0 / mu[k] + 1.0 / mu[m];
        let c: f64 = (0..nu.len()).map(|i| alpha[i] * a[k] * a[m] / (b - 1.0 / nu[i])).sum();
        coefs.push(-mult * c);
        rates.push(b);
    }
    (coefs, rates)
}

/// Closed-form joint survival and χ for four distinct weights.
///
/// The temporal case is the spatial one with λ₂ and λ₃ exchanged.
pub fn theorem1_chi(lambda: [f64; 4], case: PairCase) -> Result<TheoremChiResult> {
    if lambda.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::Parameter(format!("weights must be positive: {lambda:?}")));
    }
    let l = match case {
        PairCase::Temporal => [lambda[0], lambda[2], lambda[1], lambda[3]],
        _ => lambda,
    };
    let (shared, indep): (&[usize], &[usize]) = match case {
        PairCase::SpaceTime => (&[0], &[1, 2, 3]),
        _ => (&[0, 1], &[2, 3]),
    };
    check_poles(&l, shared, indep).map_err(|e| match (case, e) {
        // report pole names in the caller's labelling
        (PairCase::Temporal, Error::Parameter(m)) => {
            Error::Parameter(m.replace("λ2", "λ#").replace("λ3", "λ2").replace("λ#", "λ3"))
        }
        (_, e) => e,
    })?;
    let (coefficients, rates) = joint_terms(&l, shared, indep);

    let dominant = argmax(&lambda);
    let chi = if case.dependent_when_dominant(dominant) {
        // position of the dominant component among the shared terms
        let jl = if case == PairCase::Temporal && dominant == 2 {
            1
        } else {
            dominant
        };
        let pos = shared.iter().position(|&i| i == jl).expect("dominant is shared");
        let marginal = survival_coefs(&lambda)[dominant];
        let chi = coefficients[pos] / marginal;
        if chi.abs() < 1e-12 {
            log::warn!("leading joint-survival coefficient vanishes for {lambda:?}");
        }
        chi
    } else {
        0.0
    };
    if !(-1e-9..=1.0 + 1e-9).contains(&chi) {
        return Err(Error::Numerical(format!("χ = {chi} outside [0,1] for {lambda:?}")));
    }
    Ok(TheoremChiResult {
        case,
        lambda,
        coefficients,
        rates,
        dominant,
        chi: chi.clamp(0.0, 1.0),
    })
}
