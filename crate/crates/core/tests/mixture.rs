mod common;

use common::{ks_critical_1pct, ks_statistic, pair_chi};
use exceedmix::distributions::{GpdParams, HypoexpParams, MarginalModel};
use exceedmix::mixture::{transform_margins, Dataset, MarginTarget, MixtureParams, MixtureSimulator};
use exceedmix::simulators::{Margin, SpaceTimeLayout};
use exceedmix::Exec;

fn column(d: &Dataset, s: usize, t: usize) -> Vec<f64> {
    (0..d.replicates()).map(|r| d.get(r, s, t)).collect()
}

fn simulate(w: [f64; 4], rs: f64, rt: f64, layout: &SpaceTimeLayout, seed: u64) -> Dataset {
    let p = MixtureParams::new(w, rs, rt).unwrap();
    MixtureSimulator::new(&p, layout)
        .unwrap()
        .simulate(seed, Exec::Parallel)
        .unwrap()
}

fn small_layout(reps: usize) -> SpaceTimeLayout {
    SpaceTimeLayout::new(vec![[0.0, 0.0], [0.3, 0.1]], vec![0.0, 0.2], reps).unwrap()
}

#[test]
fn marginal_law_is_hypoexponential() {
    let w = [0.5, 0.15, 0.17, 0.18];
    let d = simulate(w, 0.4, 0.4, &small_layout(100_000), 11);
    let h = HypoexpParams::new(w).unwrap();
    for (s, t) in [(0, 0), (1, 1)] {
        let xs = column(&d, s, t);
        let ks = ks_statistic(&xs, |x| h.cdf(x));
        assert!(ks < ks_critical_1pct(xs.len()), "cell ({s},{t}): KS {ks}");
    }
}

#[test]
fn near_comonotone_limit() {
    let raw = [0.99997, 1e-5, 2e-5, 3e-5];
    let total: f64 = raw.iter().sum();
    let mut w = raw.map(|x| x / total);
    w[0] = 1.0 - w[1] - w[2] - w[3];
    let layout = SpaceTimeLayout::new(vec![[0.0, 0.0], [1e-9, 0.0]], vec![0.0], 2000).unwrap();
    let d = simulate(w, 0.4, 0.4, &layout, 3);
    let close = (0..d.replicates())
        .filter(|&r| {
            let (a, b) = (d.get(r, 0, 0), d.get(r, 1, 0));
            (a - b).abs() / a.max(b) < 1e-3
        })
        .count();
    assert!(close as f64 >= 0.95 * d.replicates() as f64, "{close}");
}

#[test]
fn finite_threshold_regimes_follow_dominant_component() {
    // points (0,0,0), (0.8,0,0), (0,0,0.4), (0.8,0,0.4)
    let layout = SpaceTimeLayout::new(vec![[0.0, 0.0], [0.8, 0.0]], vec![0.0, 0.4], 10_000).unwrap();
    let pairs = [((0, 0), (1, 0)), ((0, 0), (0, 1)), ((0, 0), (1, 1))];
    // dependent iff: spatial pair j ∈ {1,2}; temporal j ∈ {1,3}; space-time j = 1
    let dependent = |j: usize, case: usize| match case {
        0 => j == 0 || j == 1,
        1 => j == 0 || j == 2,
        _ => j == 0,
    };
    for j in 0..4 {
        let mut w = [0.19, 0.2, 0.21, 0.2];
        w[j] = 0.4;
        let others: Vec<usize> = (0..4).filter(|&k| k != j).collect();
        for (i, &k) in others.iter().enumerate() {
            w[k] = [0.19, 0.2, 0.21][i];
        }
        let d = simulate(w, 0.2, 0.2, &layout, 100 + j as u64);
        for (case, (a, b)) in pairs.iter().enumerate() {
            let (x, y) = (column(&d, a.0, a.1), column(&d, b.0, b.1));
            let (lo, hi) = (pair_chi(&x, &y, 0.8), pair_chi(&x, &y, 0.99));
            if dependent(j, case) {
                assert!(hi > 0.1, "dominant {j}, case {case}: plateau {hi}");
            } else {
                assert!(hi < 0.1 && hi < 0.5 * lo, "dominant {j}, case {case}: {lo} -> {hi}");
            }
        }
    }
}

#[test]
fn spatial_dominant_signature() {
    let layout = SpaceTimeLayout::new(vec![[0.0, 0.0], [0.05, 0.0]], vec![0.0, 0.1], 100_000).unwrap();
    let d = simulate([0.15, 0.5, 0.17, 0.18], 0.4, 0.4, &layout, 2);
    let temporal = pair_chi(&column(&d, 0, 0), &column(&d, 0, 1), 0.99);
    let spatial = pair_chi(&column(&d, 0, 0), &column(&d, 1, 0), 0.99);
    assert!(temporal < 0.05 + 0.01, "temporal {temporal}");
    assert!(spatial > 0.15, "spatial {spatial}");
}

#[test]
fn uniform_and_gpd_targets() {
    let w = [0.1, 0.2, 0.3, 0.4];
    let d = simulate(w, 0.3, 0.3, &small_layout(100_000), 5);
    let u = transform_margins(&d, &MarginTarget::Uniform).unwrap();
    assert_eq!(u.margin, Margin::Uniform);
    let col = column(&u, 1, 0);
    let ks = ks_statistic(&col, |x| x.clamp(0.0, 1.0));
    assert!(ks < ks_critical_1pct(col.len()), "uniform KS {ks}");

    let g = GpdParams::new(0.0, 1.0, 0.2).unwrap();
    let model = MarginalModel::homogeneous(2, g);
    let y = transform_margins(&d, &MarginTarget::Model(model)).unwrap();
    let col: Vec<f64> = column(&y, 0, 1).into_iter().filter(|&v| v > 0.0).collect();
    let ks = ks_statistic(&col, |x| g.cdf(x));
    assert!(ks < ks_critical_1pct(col.len()), "GPD KS {ks}");

    // strictly increasing per cell: ranks within each replicate are unchanged
    for r in 0..200 {
        let rank = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
            idx
        };
        assert_eq!(rank(d.replicate(r)), rank(y.replicate(r)));
        assert_eq!(rank(d.replicate(r)), rank(u.replicate(r)));
    }
}
