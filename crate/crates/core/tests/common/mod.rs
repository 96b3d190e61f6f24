#![allow(dead_code)]

/// Two-sided Kolmogorov-Smirnov statistic of `xs` against `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Symmetric empirical χ at level `q` (on each margin's own quantile) for
/// paired samples.
pub fn pair_chi(a: &[f64], b: &[f64], tau: f64) -> f64 {
    let qa = quantile(a, tau);
    let qb = quantile(b, tau);
    let (mut both, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        let (ea, eb) = (x > qa, y > qb);
        na += ea as usize;
        nb += eb as usize;
        both += (ea && eb) as usize;
    }
    2.0 * both as f64 / (na + nb) as f64
}

pub fn quantile(xs: &[f64], tau: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * tau;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// `side × side` sites on a 0.1-spaced grid at one time.
pub fn decimal_grid(side: usize, reps: usize) -> exceedmix::simulators::SpaceTimeLayout {
    let sites = (0..side * side)
        .map(|k| [(k % side) as f64 / 10.0, (k / side) as f64 / 10.0])
        .collect();
    exceedmix::simulators::SpaceTimeLayout::new(sites, vec![0.0], reps).unwrap()
}

/// Symmetric χ at `tau` pooled over every site pair at spatial lag `h`
/// (single-time layouts, uniform values).
pub fn pooled_lag_chi(layout: &exceedmix::simulators::SpaceTimeLayout, u: &[f64], h: f64, tau: f64) -> f64 {
    let m = layout.n_sites();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
        .filter(|&(a, b)| (layout.spatial_lag(a, b) - h).abs() < 1e-9)
        .collect();
    assert!(!pairs.is_empty(), "no pairs at lag {h}");
    let (mut both, mut exc) = (0u64, 0u64);
    for r in 0..layout.replicates {
        let v = &u[r * m..(r + 1) * m];
        for &(a, b) in &pairs {
            let (ea, eb) = (v[a] > tau, v[b] > tau);
            exc += ea as u64 + eb as u64;
            both += (ea && eb) as u64;
        }
    }
    2.0 * both as f64 / exc as f64
}
