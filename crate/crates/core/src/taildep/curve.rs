use crate::distributions::HypoexpParams;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mixture::{MixtureParams, MixtureSimulator};
use crate::rng;
use crate::simulators::SpaceTimeLayout;

/// Monte Carlo χ at level `tau` of the full mixture for each `(h_S, h_T)`
/// lag, from `n` independent pairs per lag. Lag `i` simulates from
/// `derive_seed(seed, [i])`.
pub fn model_chi_curve(
    p: &MixtureParams,
    lags: &[(f64, f64)],
    tau: f64,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<f64>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Parameter(format!("level {tau} not in (0,1)")));
    }
    if n == 0 {
        return Err(Error::Parameter("need at least one simulated pair".into()));
    }
    let q = HypoexpParams::new(p.weights())?.quantile(tau)?;
    let mut out = Vec::with_capacity(lags.len());
    for (i, &(hs, ht)) in lags.iter().enumerate() {
        let (hs, ht) = (hs.abs(), ht.abs());
        let sites = if hs > 0.0 {
            vec![[0.0, 0.0], [hs, 0.0]]
        } else {
            vec![[0.0, 0.0]]
        };
        let times = if ht > 0.0 { vec![0.0, ht] } else { vec![0.0] };
        let layout = SpaceTimeLayout::new(sites, times, n)?;
        let last = layout.n_points() - 1;
        let d = MixtureSimulator::new(p, &layout)?.simulate(rng::derive_seed(seed, &[i as u64]), exec)?;
        let (mut both, mut exc) = (0u64, 0u64);
        for r in 0..n {
            let v = d.replicate(r);
            let (a, b) = (v[0] > q, v[last] > q);
            exc += a as u64 + b as u64;
            both += (a && b) as u64;
        }
        out.push(if exc == 0 {
            f64::NAN
        } else {
            2.0 * both as f64 / exc as f64
        });
    }
    Ok(out)
}
