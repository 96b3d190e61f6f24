mod common;

use exceedmix::mixture::{transform_margins, Dataset, MarginTarget, MixtureParams, MixtureSimulator};
use exceedmix::rng;
use exceedmix::simulators::{sample_brown_resnick, Margin, SpaceTimeLayout, VariogramSpec};
use exceedmix::taildep::*;
use exceedmix::Exec;
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn phi(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Two points per replicate at the given lag, so each bin holds one pair
/// per replicate.
fn pair_layout(hs: f64, ht: f64, reps: usize) -> SpaceTimeLayout {
    let sites = if hs > 0.0 {
        vec![[0.0, 0.0], [hs, 0.0]]
    } else {
        vec![[0.0, 0.0]]
    };
    let times = if ht > 0.0 { vec![0.0, ht] } else { vec![0.0] };
    SpaceTimeLayout::new(sites, times, reps).unwrap()
}

#[test]
fn independent_uniforms() {
    let layout = pair_layout(0.15, 0.0, 100_000);
    let mut r = rng::stream(8, &[]);
    let values: Vec<f64> = (0..layout.n_cells()).map(|_| r.random()).collect();
    let d = Dataset::new(layout, values, Margin::Uniform).unwrap();
    let g = PairBinGrid::default();
    let chi = empirical_chi(&d, 0.9, &g).unwrap();
    let b = g.bin(0.15, 0.0).unwrap();
    assert_eq!(chi.counts[b], 100_000);
    assert!((chi.raw[b] - 0.1).abs() < 0.01, "{}", chi.raw[b]);
    let corr = conditional_exceedance_corr(&d, 0.5, &g).unwrap();
    assert!(corr.values[b].abs() < 0.02, "{}", corr.values[b]);
}

#[test]
fn brown_resnick_pairs_match_extremal_coefficient() {
    let v = VariogramSpec::space_time(0.5, 0.5).unwrap();
    let layout = common::decimal_grid(6, 100_000);
    let z = sample_brown_resnick(&v, &layout, 21).unwrap();
    let u: Vec<f64> = z.values.iter().map(|&z| (-1.0 / z).exp()).collect();
    for h in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let got = common::pooled_lag_chi(&layout, &u, h, 0.999);
        let want = 2.0 - 2.0 * phi(v.gamma(h, 0.0).sqrt() / 2.0);
        assert!((got - want).abs() < 0.03, "lag {h}: {got} vs {want}");
    }
    // the binned estimator agrees with the direct count in a single-lag bin
    let d = Dataset::new(layout.clone(), u.clone(), Margin::Uniform).unwrap();
    let g = PairBinGrid::new(vec![0.05, 0.12], vec![0.0, 0.05]).unwrap();
    let chi = empirical_chi(&d, 0.999, &g).unwrap();
    assert!((chi.raw[0] - common::pooled_lag_chi(&layout, &u, 0.1, 0.999)).abs() < 1e-12);
}

#[test]
fn permuted_sites_give_independence_level() {
    let p = MixtureParams::new([0.5, 0.15, 0.17, 0.18], 0.4, 0.4).unwrap();
    let layout = SpaceTimeLayout::new(vec![[0.0, 0.0], [0.15, 0.0], [0.0, 0.25]], vec![0.0, 0.1, 0.2], 4000).unwrap();
    let x = MixtureSimulator::new(&p, &layout)
        .unwrap()
        .simulate(4, Exec::Parallel)
        .unwrap();
    let mut u = transform_margins(&x, &MarginTarget::Uniform).unwrap();
    // permuting values within a replicate but across replicates of each cell
    // would keep margins; shuffling each cell's column across replicates
    // destroys all within-replicate dependence
    let np = layout.n_points();
    let mut r = rng::stream(5, &[]);
    for p in 0..np {
        let mut col: Vec<f64> = (0..4000).map(|k| u.values[k * np + p]).collect();
        col.shuffle(&mut r);
        for (k, v) in col.into_iter().enumerate() {
            u.values[k * np + p] = v;
        }
    }
    let tau = 0.9;
    let chi = empirical_chi(&u, tau, &PairBinGrid::default()).unwrap();
    let pop: Vec<usize> = (0..15).filter(|&b| chi.counts[b] > 0).collect();
    let mean = pop.iter().map(|&b| chi.raw[b]).sum::<f64>() / pop.len() as f64;
    let total: u64 = pop.iter().map(|&b| chi.counts[b]).sum();
    // each pair contributes about two conditioning exceedances at rate 1−τ
    let sd = ((tau * (1.0 - tau)) / (2.0 * (1.0 - tau) * total as f64)).sqrt() * (pop.len() as f64).sqrt();
    assert!((mean - (1.0 - tau)).abs() < 4.0 * sd, "{mean} sd {sd}");
    assert!(chi
        .raw
        .iter()
        .filter(|v| v.is_finite())
        .all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn inverted_dominant_mixture_has_positive_conditional_correlation() {
    let p = MixtureParams::new([0.1, 0.15, 0.2, 0.55], 0.4, 0.4).unwrap();
    let layout = pair_layout(0.05, 0.0, 20_000);
    let x = MixtureSimulator::new(&p, &layout)
        .unwrap()
        .simulate(6, Exec::Parallel)
        .unwrap();
    let u = transform_margins(&x, &MarginTarget::Uniform).unwrap();
    let g = PairBinGrid::default();
    let c = conditional_exceedance_corr(&u, 0.5, &g).unwrap();
    let b = g.bin(0.05, 0.0).unwrap();
    let n = c.counts[b] as f64;
    // standard error of a correlation estimate near zero is about 1/√n
    assert!(c.values[b] > 3.0 / n.sqrt(), "{} with {n} pairs", c.values[b]);
}

#[test]
fn closed_form_matches_monte_carlo() {
    let l = [0.5, 0.15, 0.17, 0.18];
    let theory = theorem1_chi(l, PairCase::SpaceTime).unwrap().chi;
    let mc = chi_mc_oracle(l, PairCase::SpaceTime, 1.0 - 1e-4, 100_000_000, 31, Exec::Parallel).unwrap();
    assert!((theory - mc).abs() < 0.02, "{theory} vs {mc}");

    let l = [0.15, 0.17, 0.18, 0.5];
    assert_eq!(theorem1_chi(l, PairCase::SpaceTime).unwrap().chi, 0.0);
    let mc = chi_mc_oracle(l, PairCase::SpaceTime, 1.0 - 1e-4, 100_000_000, 32, Exec::Parallel).unwrap();
    assert!(mc < 0.01, "{mc}");
}

#[test]
fn joint_survival_matches_monte_carlo() {
    let mut r = rng::stream(41, &[]);
    let mut checked = 0;
    while checked < 50 {
        let raw: [f64; 4] = std::array::from_fn(|_| r.random_range(0.05..1.0));
        let t: f64 = raw.iter().sum();
        let mut l = raw.map(|x| x / t);
        l[3] = 1.0 - l[0] - l[1] - l[2];
        let Ok(th) = theorem1_chi(l, PairCase::Spatial) else {
            continue;
        };
        let ys = [0.5, 1.0, 2.0];
        let mc =
            joint_survival_mc_conditional(l, PairCase::Spatial, &ys, 10_000_000, 42 + checked, Exec::Parallel).unwrap();
        for m in mc {
            let s = th.joint_survival(m.y);
            assert!((s - m.estimate).abs() < 3.0 * m.binomial_sigma, "{l:?}: {s} vs {m:?}");
        }
        checked += 1;
    }
}

#[test]
fn model_curve_limits() {
    let p = MixtureParams::new([0.3, 0.2, 0.15, 0.35], 0.4, 0.4).unwrap();
    let tau = 0.9;
    let c = model_chi_curve(&p, &[(0.0, 0.0), (40.0, 40.0)], tau, 100_000, 9, Exec::Parallel).unwrap();
    assert_eq!(c[0], 1.0);
    assert!((c[1] - (1.0 - tau)).abs() < 0.01, "{}", c[1]);
}

#[test]
fn featurisation_chain_is_deterministic() {
    let p = MixtureParams::new([0.4, 0.1, 0.2, 0.3], 0.4, 0.4).unwrap();
    let layout = SpaceTimeLayout::grid(5, 5, 30).unwrap();
    let x = MixtureSimulator::new(&p, &layout)
        .unwrap()
        .simulate(1, Exec::Parallel)
        .unwrap();
    let u = transform_margins(&x, &MarginTarget::Uniform).unwrap();
    let a = smooth_surface(&empirical_chi(&u, 0.5, &PairBinGrid::default()).unwrap()).unwrap();
    let b = smooth_surface(&empirical_chi(&u, 0.5, &PairBinGrid::default()).unwrap()).unwrap();
    let bits = |s: &ChiSurface| {
        s.smooth
            .as_ref()
            .unwrap()
            .iter()
            .map(|v| v.to_bits())
            .collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
}
