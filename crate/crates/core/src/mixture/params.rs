use serde::{Deserialize, Serialize};

use crate::distributions::{argmax, HypoexpParams};
use crate::error::{Error, Result};
use crate::simulators::VariogramSpec;

/// Mixture weights `(λ₁, λ₂, λ₃, λ₄)` of the spatiotemporal, spatial,
/// temporal and asymptotically independent components, plus the shared
/// spatial and temporal ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub lambda: HypoexpParams,
    pub range_s: f64,
    pub range_t: f64,
}

impl MixtureParams {
    pub fn new(lambda: [f64; 4], range_s: f64, range_t: f64) -> Result<Self> {
        let lambda = HypoexpParams::new(lambda)?;
        for (name, r) in [("spatial", range_s), ("temporal", range_t)] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Parameter(format!("{name} range must be positive, got {r}")));
            }
        }
        Ok(Self {
            lambda,
            range_s,
            range_t,
        })
    }

    pub fn weights(&self) -> [f64; 4] {
        self.lambda.weights()
    }

    /// Zero-based index of the largest weight.
    pub fn dominant_index(&self) -> usize {
        self.lambda.dominant_index()
    }

    /// Space-time variogram with unit smoothness.
    pub fn variogram(&self) -> VariogramSpec {
        VariogramSpec::space_time(self.range_s, self.range_t).expect("ranges validated at construction")
    }

    /// `(λ₁, λ₂, λ₃, λ₄, ρ_S, ρ_T)`.
    pub fn to_array(&self) -> [f64; 6] {
        let w = self.weights();
        [w[0], w[1], w[2], w[3], self.range_s, self.range_t]
    }
}

/// Unconstrained coordinates: log weight ratios against `λ₁`, then the log
/// ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaParams(pub [f64; 5]);

impl EtaParams {
    pub fn new(eta: [f64; 5]) -> Result<Self> {
        if eta.iter().any(|e| !e.is_finite()) {
            return Err(Error::Parameter(format!("non-finite eta {eta:?}")));
        }
        Ok(Self(eta))
    }
}

pub fn theta_to_eta(p: &MixtureParams) -> EtaParams {
    let w = p.weights();
    let l1 = w[0].ln();
    EtaParams([
        w[1].ln() - l1,
        w[2].ln() - l1,
        w[3].ln() - l1,
        p.range_s.ln(),
        p.range_t.ln(),
    ])
}

/// Inverse of [`theta_to_eta`]. Weights that fall within the distinctness
/// gate of each other are reported as a parameter error.
pub fn eta_to_theta(e: &EtaParams) -> Result<MixtureParams> {
    let EtaParams(eta) = EtaParams::new(e.0)?;
    let logs = [0.0, eta[0], eta[1], eta[2]];
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = logs.map(|l| (l - top).exp());
    let total: f64 = raw.iter().sum();
    let mut w = raw.map(|r| r / total);
    // absorb rounding into the largest weight so the sum is 1 to machine precision
    let j = argmax(&w);
    w[j] = 1.0 - (0..4).filter(|&k| k != j).map(|k| w[k]).sum::<f64>();
    MixtureParams::new(w, eta[3].exp(), eta[4].exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    #[test]
    fn symmetric_point_maps_near_zero() {
        let eps = 1e-4;
        let p = MixtureParams::new(
            [0.25 + 3.0 * eps, 0.25 - eps, 0.25 - 1.1 * eps, 0.25 - 0.9 * eps],
            1.0,
            0.5,
        )
        .unwrap();
        let e = theta_to_eta(&p);
        for k in 0..3 {
            assert!(e.0[k].abs() < 2e-3);
        }
        assert_eq!(e.0[3], 0.0);
    }

    #[test]
    fn rounded_estimate_round_trip() {
        // these rounded weights sum to 0.999, so normalise first
        let w: [f64; 4] = [0.134, 0.063, 0.268, 0.534];
        let total: f64 = w.iter().sum();
        let mut w = w.map(|x| x / total);
        w[3] = 1.0 - w[0] - w[1] - w[2];
        let p = MixtureParams::new(w, 0.261, 0.244).unwrap();
        let e = theta_to_eta(&p);
        assert!((e.0[0] - (0.063f64 / 0.134).ln()).abs() < 1e-12);
        assert!((e.0[2] - (0.534f64 / 0.134).ln()).abs() < 1e-12);
        let q = eta_to_theta(&e).unwrap();
        for (a, b) in p.to_array().iter().zip(q.to_array()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_weights_rejected() {
        let r = eta_to_theta(&EtaParams([0.0; 5]));
        assert!(matches!(r, Err(Error::Parameter(_))), "{r:?}");
    }

    #[test]
    fn simulation_setting_from_eta() {
        let e = EtaParams([0.3f64.ln(), 0.34f64.ln(), 0.36f64.ln(), 0.4f64.ln(), 0.4f64.ln()]);
        let p = eta_to_theta(&e).unwrap();
        let want = [0.5, 0.15, 0.17, 0.18, 0.4, 0.4];
        for (a, b) in p.to_array().iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn non_finite_eta_rejected() {
        assert!(eta_to_theta(&EtaParams([f64::NAN, 0.0, 0.1, 0.0, 0.0])).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip(
            a in 0.01f64..1.0, b in 0.01f64..1.0, c in 0.01f64..1.0, d in 0.01f64..1.0,
            rs in 0.01f64..3.0, rt in 0.01f64..3.0,
        ) {
            let total = a + b + c + d;
            let mut w = [a / total, b / total, c / total, d / total];
            w[3] = 1.0 - w[0] - w[1] - w[2];
            if let Ok(p) = MixtureParams::new(w, rs, rt) {
                let q = eta_to_theta(&theta_to_eta(&p)).unwrap();
                for (x, y) in p.to_array().iter().zip(q.to_array()) {
                    prop_assert!((x - y).abs() < 1e-12, "{:?} vs {:?}", p, q);
                }
            }
        }
    }
}
