//! Acceptance suite. Runs every criterion at its stated tolerance and
//! prints one PASS/FAIL line each; exits non-zero if any fails.
//!
//! `cargo test --test acceptance -- 3 5` runs only criteria 3 and 5.

mod common;

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_distr::Exp1;
use statrs::distribution::{ContinuousCDF, Normal};

use exceedmix::distributions::{gpd_fit_shared_shape, GpdFitConfig, GpdParams, HypoexpParams, MarginalModel};
use exceedmix::mixture::{simulate_mixture, transform_margins, Dataset, MarginTarget, MixtureParams};
use exceedmix::rng::{derive_seed, stream};
use exceedmix::sbi::{
    bootstrap_ci, estimate, run_campaign, train_forest_set, CiConvention, FeatureConfig, ForestConfig, ForestSet,
    PriorSpec,
};
use exceedmix::simulators::{sample_brown_resnick, SpaceTimeLayout, VariogramSpec};
use exceedmix::taildep::{chi_mc_oracle, joint_survival_mc_conditional, model_chi_curve, theorem1_chi, PairCase};
use exceedmix::Exec;
use exceedmix_pipeline::margins::fit_margins_and_pit;
use exceedmix_pipeline::preprocess::PreprocessConfig;
use exceedmix_pipeline::study::{StudyConfig, StudySeeds};

/// Every random stage below derives from this and a criterion-specific path.
const MASTER: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Uniform draw on the probability simplex that the closed form accepts
/// for every pair case.
fn random_weights<R: Rng>(r: &mut R) -> [f64; 4] {
    loop {
        let e: [f64; 4] = std::array::from_fn(|_| r.sample(Exp1));
        let t: f64 = e.iter().sum();
        let mut l = e.map(|x| x / t);
        l[3] = 1.0 - l[0] - l[1] - l[2];
        if PairCase::ALL.iter().all(|&c| theorem1_chi(l, c).is_ok()) {
            return l;
        }
    }
}

/// [`random_weights`] with the largest weight moved to position `j`.
fn random_with_dominant<R: Rng>(r: &mut R, j: usize) -> [f64; 4] {
    loop {
        let mut l = random_weights(r);
        let m = (0..4).max_by(|&a, &b| l[a].total_cmp(&l[b])).unwrap();
        l.swap(m, j);
        if PairCase::ALL.iter().all(|&c| theorem1_chi(l, c).is_ok()) {
            return l;
        }
    }
}

/// Weights with a clearly separated maximum: the dominant weight is
/// U(0.45, 0.6) at a random index, the rest split uniformly, every other
/// weight at most 0.3 and all pairwise gaps at least 0.02.
fn separated_weights<R: Rng>(r: &mut R) -> [f64; 4] {
    loop {
        let j = r.random_range(0..4);
        let d = r.random_range(0.45..0.6);
        let e: [f64; 3] = std::array::from_fn(|_| r.sample(Exp1));
        let t: f64 = e.iter().sum();
        let mut rest = e.iter().map(|x| (1.0 - d) * x / t);
        let mut l: [f64; 4] = std::array::from_fn(|k| if k == j { d } else { rest.next().unwrap() });
        let last = if j == 3 { 2 } else { 3 };
        l[last] = 1.0 - (0..4).filter(|&k| k != last).map(|k| l[k]).sum::<f64>();
        let gaps = (0..4).all(|a| (a + 1..4).all(|b| (l[a] - l[b]).abs() >= 0.02));
        let small = (0..4).filter(|&k| k != j).all(|k| l[k] <= 0.3);
        if gaps && small && PairCase::ALL.iter().all(|&c| theorem1_chi(l, c).is_ok()) {
            return l;
        }
    }
}

/// Weight `0.5` at `dominant`, the rest `0.15, 0.17, 0.18` in order.
fn setting(dominant: usize) -> MixtureParams {
    let mut rest = [0.15, 0.17, 0.18].into_iter();
    let l = std::array::from_fn(|k| if k == dominant { 0.5 } else { rest.next().unwrap() });
    MixtureParams::new(l, 0.4, 0.4).unwrap()
}

fn c1_hypoexponential() -> Outcome {
    const N: usize = 10_000_000;
    const BLOCK: usize = 1 << 20;
    let xs = [0.25, 0.5, 1.0, 2.0];
    let mut r = stream(MASTER, &[1]);
    let lambdas: Vec<[f64; 4]> = (0..50).map(|_| random_weights(&mut r)).collect();
    let mut worst: f64 = 0.0;
    let mut misses = 0;
    for (i, l) in lambdas.iter().enumerate() {
        let h = HypoexpParams::new(*l).unwrap();
        // conditional on the first three terms, P(λ₄E₄ ≤ x − s) is explicit
        let blocks = N.div_ceil(BLOCK);
        let sums = Exec::Parallel.map(blocks, |b| {
            let mut g = stream(MASTER, &[1, i as u64, b as u64]);
            let mut acc = [0.0f64; 4];
            for _ in 0..BLOCK.min(N - b * BLOCK) {
                let s: f64 = (0..3).map(|k| l[k] * g.sample::<f64, _>(Exp1)).sum();
                for (a, &x) in acc.iter_mut().zip(&xs) {
                    if x > s {
                        *a += 1.0 - (-(x - s) / l[3]).exp();
                    }
                }
            }
            acc
        });
        for (k, &x) in xs.iter().enumerate() {
            let mc = sums.iter().map(|a| a[k]).sum::<f64>() / N as f64;
            let f = h.cdf(x);
            let sigma = (f * (1.0 - f) / N as f64).sqrt();
            let z = (f - mc).abs() / sigma;
            worst = worst.max(z);
            misses += (z > 3.0) as usize;
        }
    }
    outcome(
        misses == 0,
        format!("50 weight vectors x 4 points, max |Δ|/σ = {worst:.2}"),
    )
}

fn c2_closed_form_chi() -> Outcome {
    let dependent = |case: PairCase, j: usize| match case {
        PairCase::Spatial => j == 0 || j == 1,
        PairCase::Temporal => j == 0 || j == 2,
        PairCase::SpaceTime => j == 0,
    };
    let mut r = stream(MASTER, &[2]);
    let mut table_ok = true;
    for j in 0..4 {
        for case in PairCase::ALL {
            for _ in 0..5 {
                let l = random_with_dominant(&mut r, j);
                let chi = theorem1_chi(l, case).unwrap().chi;
                if (chi > 0.0) != dependent(case, j) {
                    table_ok = false;
                    println!("    truth table: {case:?} dominant λ{} gives χ = {chi}", j + 1);
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    let mut misses = 0;
    for (c, case) in PairCase::ALL.into_iter().enumerate() {
        for k in 0..10 {
            let l = separated_weights(&mut r);
            let theory = theorem1_chi(l, case).unwrap().chi;
            let seed = derive_seed(MASTER, &[2, c as u64, k]);
            let mc = chi_mc_oracle(l, case, 1.0 - 1e-4, 100_000_000, seed, Exec::Parallel).unwrap();
            let d = (theory - mc).abs();
            if d > worst {
                worst = d;
                worst_at = format!("{} {l:.3?}: closed form {theory:.4}, MC {mc:.4}", case.name());
            }
            misses += (d > 0.02) as usize;
        }
    }
    outcome(
        table_ok && misses == 0,
        format!("12 cells consistent: {table_ok}; {misses}/30 χ outside ±0.02, worst {worst:.4} ({worst_at})"),
    )
}

fn c3_coefficient_identity() -> Outcome {
    let ys = [0.5, 1.0, 2.0];
    let mut r = stream(MASTER, &[3]);
    let mut worst_sum: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    let mut misses = 0;
    for i in 0..100u64 {
        let l = random_weights(&mut r);
        for (c, case) in PairCase::ALL.into_iter().enumerate() {
            let th = theorem1_chi(l, case).unwrap();
            worst_sum = worst_sum.max((th.joint_survival(0.0) - 1.0).abs());
            let seed = derive_seed(MASTER, &[3, i, c as u64]);
            for m in joint_survival_mc_conditional(l, case, &ys, 10_000_000, seed, Exec::Parallel).unwrap() {
                let z = (th.joint_survival(m.y) - m.estimate).abs() / m.binomial_sigma;
                worst_z = worst_z.max(z);
                if z > 3.0 {
                    misses += 1;
                    println!(
                        "    {} {l:.4?} y = {}: closed form {:.8}, MC {:.8} ({z:.2} binomial σ, {:.2} own σ)",
                        case.name(),
                        m.y,
                        th.joint_survival(m.y),
                        m.estimate,
                        (th.joint_survival(m.y) - m.estimate).abs() / m.std_error
                    );
                }
            }
        }
    }
    outcome(
        worst_sum < 1e-10 && misses == 0,
        format!("max |S(0) − 1| = {worst_sum:.1e}; S(y): {misses}/900 beyond 3σ, max |Δ|/σ = {worst_z:.2}"),
    )
}

fn c4_brown_resnick() -> Outcome {
    let v = VariogramSpec::space_time(0.4, 0.4).unwrap();
    let side = 6;
    let sites = (0..side * side)
        .map(|k| [(k % side) as f64 / 10.0, (k / side) as f64 / 10.0])
        .collect();
    let layout = SpaceTimeLayout::new(sites, vec![0.0], 100_000).unwrap();
    let z = sample_brown_resnick(&v, &layout, derive_seed(MASTER, &[4])).unwrap();
    let m = layout.n_sites();
    let phi = |x: f64| Normal::standard().cdf(x);
    let tau: f64 = 0.999;
    let q = -1.0 / tau.ln();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for h in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let (mut both, mut exc) = (0u64, 0u64);
        for a in 0..m {
            for b in a + 1..m {
                if (layout.spatial_lag(a, b) - h).abs() > 1e-9 {
                    continue;
                }
                for rep in 0..layout.replicates {
                    let (ea, eb) = (z.values[rep * m + a] > q, z.values[rep * m + b] > q);
                    exc += ea as u64 + eb as u64;
                    both += (ea && eb) as u64;
                }
            }
        }
        let got = 2.0 * both as f64 / exc as f64;
        let want = 2.0 - 2.0 * phi(v.gamma(h, 0.0).sqrt() / 2.0);
        worst = worst.max((got - want).abs());
        parts.push(format!("{h}: {got:.3}/{want:.3}"));
    }
    let mut site0: Vec<f64> = (0..layout.replicates).map(|rep| z.values[rep * m]).collect();
    site0.sort_by(f64::total_cmp);
    let n = site0.len() as f64;
    let ks = site0
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (-1.0 / x).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    let crit = 1.6276 / n.sqrt();
    outcome(
        worst < 0.03 && ks < crit,
        format!(
            "χ at lags [{}], max |Δ| = {worst:.3}; KS {ks:.4} vs 1% critical {crit:.4}",
            parts.join(", ")
        ),
    )
}

/// 5×5 sites on the unit square, 5 times, 100 replicates.
fn grid_layout() -> SpaceTimeLayout {
    SpaceTimeLayout::grid(5, 5, 100).unwrap()
}

fn gpd_margins(d: &Dataset) -> Dataset {
    let m = MarginalModel::homogeneous(d.layout.n_sites(), GpdParams::new(0.0, 1.0, 0.2).unwrap());
    transform_margins(d, &MarginTarget::Model(m)).unwrap()
}

/// Forests trained once on a 2000-row campaign for [`grid_layout`].
fn grid_forests() -> &'static ForestSet {
    static FS: OnceLock<ForestSet> = OnceLock::new();
    FS.get_or_init(|| {
        let features = FeatureConfig::default();
        let ts = run_campaign(
            &PriorSpec::default(),
            &grid_layout(),
            2000,
            derive_seed(MASTER, &[5, 0]),
            &features,
            Exec::Parallel,
        )
        .unwrap();
        let cfg = ForestConfig {
            seed: derive_seed(MASTER, &[5, 1]),
            ..ForestConfig::default()
        };
        train_forest_set(&ts, &features, &cfg, Exec::Parallel).unwrap()
    })
}

/// Simulate, move to GPD margins, refit the margins and transform back.
fn observed_uniform(p: &MixtureParams, seed: u64) -> (Dataset, f64) {
    let raw = gpd_margins(&simulate_mixture(p, &grid_layout(), seed).unwrap());
    let fit = fit_margins_and_pit(&raw, 0.8, &GpdFitConfig::default()).unwrap();
    (fit.uniform, fit.model.shape)
}

fn c5_simulation_study() -> Outcome {
    let fs = grid_forests();
    let r2: Vec<String> = fs.models.iter().map(|m| format!("{:.2}", m.meta.oob_r2)).collect();
    println!("    forest OOB R²: {}", r2.join(", "));
    let mut pass = true;
    let mut rows = Vec::new();
    for i in 0..4 {
        let p = setting(i);
        let (mut hits, mut err, mut rs, mut rt, mut xi) = (0, 0.0, 0.0, 0.0, 0.0);
        for rep in 0..20u64 {
            let (u, shape) = observed_uniform(&p, derive_seed(MASTER, &[5, 2, i as u64, rep]));
            let e = estimate(fs, &u).unwrap();
            hits += (e.dominant_index() == i) as usize;
            err += (e.weights()[i] - 0.5).abs() / 20.0;
            rs += e.range_s / 20.0;
            rt += e.range_t / 20.0;
            xi += shape / 20.0;
        }
        let ranges_ok = if i == 0 {
            [rs, rt].iter().all(|&r| r > 0.2 && r < 0.9)
        } else {
            (rs - 0.4).abs() < 0.25 && (rt - 0.4).abs() < 0.25
        };
        let ok = hits >= 16 && err < 0.15 && ranges_ok;
        pass &= ok;
        rows.push(format!(
            "λ{} dominant: {hits}/20 identified, mean |λ̂−0.5| {err:.3}, ρ̂S {rs:.3}, ρ̂T {rt:.3}, ξ̂ {xi:.3}{}",
            i + 1,
            if ok { "" } else { " [fail]" }
        ));
    }
    for r in &rows {
        println!("    {r}");
    }
    outcome(pass, "four settings, 20 repetitions each, S = 2000".into())
}

fn c6_bootstrap_votes() -> Outcome {
    let fs = grid_forests();
    let (u, _) = observed_uniform(&setting(3), derive_seed(MASTER, &[6, 0]));
    let e = bootstrap_ci(
        fs,
        &u,
        500,
        derive_seed(MASTER, &[6, 1]),
        Exec::Parallel,
        CiConvention::IncludeOriginal,
    )
    .unwrap();
    let share = e.vote_share[3];
    outcome(
        share >= 0.9,
        format!(
            "λ₄ largest in {share:.3} of 500 resamples; λ̂ = {:.3?}",
            e.estimate.weights()
        ),
    )
}

fn c7_independence_limit() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let taus = [0.8, 0.9, 0.95];
        for (k, &tau) in taus.iter().enumerate() {
            let seed = derive_seed(MASTER, &[7, i as u64, k as u64]);
            let c = model_chi_curve(&setting(i), &[(10.0, 10.0)], tau, 200_000, seed, Exec::Parallel).unwrap();
            worst = worst.max((c[0] - (1.0 - tau)).abs());
        }
    }
    outcome(
        worst < 0.02,
        format!("lag (10, 10), four settings x τ ∈ {{0.8, 0.9, 0.95}}, max |χ − (1−τ)| = {worst:.4}"),
    )
}

fn c8_gpd_recovery() -> Outcome {
    let p = setting(3);
    let (mut xi, mut sigma) = (0.0, 0.0);
    for run in 0..20u64 {
        let d = gpd_margins(&simulate_mixture(&p, &grid_layout(), derive_seed(MASTER, &[8, run])).unwrap());
        let l = &d.layout;
        let data: Vec<Vec<f64>> = (0..l.n_sites())
            .map(|s| {
                (0..l.replicates)
                    .flat_map(|r| (0..l.n_times()).map(move |t| (r, t)))
                    .map(|(r, t)| d.get(r, s, t))
                    .collect()
            })
            .collect();
        let m = gpd_fit_shared_shape(&data, &vec![0.0; l.n_sites()], &GpdFitConfig::default()).unwrap();
        xi += m.shape / 20.0;
        sigma += m.scales.iter().sum::<f64>() / m.scales.len() as f64 / 20.0;
    }
    outcome(
        (xi - 0.2).abs() < 0.05 && (sigma - 1.0).abs() < 0.1,
        format!("25 sites, 20 runs: mean ξ̂ = {xi:.4}, mean σ̂ = {sigma:.4}"),
    )
}

const STUDY_STATIONS: [common::Station; 8] = [
    ("09380000", -111.59, 36.86),
    ("09382000", -111.20, 36.95),
    ("09383000", -111.42, 36.55),
    ("09384000", -110.95, 36.70),
    ("09386000", -111.05, 36.35),
    ("09388000", -111.65, 36.40),
    ("09390000", -110.80, 36.95),
    ("09392000", -111.30, 36.20),
];

fn study_dir() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = StudyConfig {
            stations: STUDY_STATIONS.iter().map(|s| s.0.to_string()).collect(),
            preprocess: PreprocessConfig {
                start_year: 1981,
                end_year: 2020,
                season_start: (5, 1),
                season_end: (5, 15),
                min_coverage: 0.5,
            },
            bootstrap_resamples: 200,
            seeds: StudySeeds::from_master(derive_seed(MASTER, &[9, 0])),
            cache_dir: Some(dir.path().join("cache")),
            ..StudyConfig::default()
        };
        common::seed_cache(&cfg, &STUDY_STATIONS, &setting(3), derive_seed(MASTER, &[9, 1]));
        serde_json::to_writer_pretty(std::fs::File::create(dir.path().join("study.json")).unwrap(), &cfg).unwrap();
        dir
    })
    .path()
}

fn run_study_cli(threads: usize, out: &str) -> Result<serde_json::Value, String> {
    let dir = study_dir();
    let o = Command::new(env!("CARGO_BIN_EXE_exceedmix"))
        .args([
            "--offline",
            "--threads",
            &threads.to_string(),
            "--config",
            "study.json",
            "run-study",
            "--out",
            out,
        ])
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    let text = std::fs::read_to_string(dir.join(out).join("estimate.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn c9_run_study() -> Outcome {
    match run_study_cli(1, "study-a") {
        Ok(v) => {
            let w: Vec<f64> = v["estimate"]["lambda"]["weights"]
                .as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().unwrap())
                .collect();
            let dominant = (0..4).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
            let (rs, rt) = (
                v["estimate"]["range_s"].as_f64().unwrap(),
                v["estimate"]["range_t"].as_f64().unwrap(),
            );
            outcome(
                dominant == 3,
                format!("8 cached stations x 15 days x 40 years: λ̂ = {w:.3?}, ρ̂S = {rs:.3}, ρ̂T = {rt:.3}"),
            )
        }
        Err(e) => outcome(false, e),
    }
}

fn c10_determinism() -> Outcome {
    if let Err(e) = run_study_cli(1, "study-a") {
        return outcome(false, e);
    }
    if let Err(e) = run_study_cli(2, "study-b") {
        return outcome(false, e);
    }
    let dir = study_dir();
    let files = ["estimate.json", "model.bin", "training.csv", "margins.json"];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| std::fs::read(dir.join("study-a").join(f)).ok() != std::fs::read(dir.join("study-b").join(f)).ok())
        .collect();
    outcome(
        differing.is_empty(),
        format!("--threads 1 vs 2, differing outputs: {differing:?}"),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "hypoexponential CDF vs Monte Carlo", c1_hypoexponential),
        (
            2,
            "closed-form χ truth table and Monte Carlo agreement",
            c2_closed_form_chi,
        ),
        (3, "joint-survival coefficient identity", c3_coefficient_identity),
        (4, "Brown-Resnick simulator fidelity", c4_brown_resnick),
        (5, "desk-scale simulation study", c5_simulation_study),
        (6, "bootstrap vote share", c6_bootstrap_votes),
        (7, "independence limit of the model χ curve", c7_independence_limit),
        (8, "shared-shape GPD recovery", c8_gpd_recovery),
        (9, "run-study on cached streamflow", c9_run_study),
        (10, "end-to-end determinism across thread counts", c10_determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    let total = Instant::now();
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{status}] criterion {id:>2}: {name} ({:.1} s): {}",
            t.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(id);
        }
    }
    println!(
        "acceptance: {} failed {failed:?}, {:.1} s total",
        failed.len(),
        total.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
