use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

use exceedmix::distributions::{GpdFitConfig, GpdParams, MarginalModel};
use exceedmix::exec::with_threads;
use exceedmix::mixture::{simulate_mixture, transform_margins, MarginTarget, MixtureParams};
use exceedmix::sbi::{
    bootstrap_ci, estimate, featurize, run_campaign, train_forest_set, CiConvention, ForestConfig, ForestSet,
};
use exceedmix::simulators::SpaceTimeLayout;
use exceedmix::taildep::{empirical_chi, model_chi_curve, smooth_surface_with, theorem1_chi, PairCase};
use exceedmix::Exec;

use crate::error::{PipelineError, Result};
use crate::io::{read_dataset, write_dataset, DatasetFile};
use crate::margins::fit_margins_and_pit;
use crate::study::{run_study, StudyConfig, StudySeeds};

#[derive(Debug, Parser)]
#[command(
    name = "exceedmix",
    version,
    about = "Spatiotemporal exceedance mixture model toolkit"
)]
struct Cli {
    /// Master seed for every random stage
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Study configuration JSON; supplies feature, prior, forest and bootstrap settings
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Never touch the network; read cached responses only
    #[arg(long, global = true)]
    offline: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutMargin {
    /// Weighted sum of exponentials, as simulated
    Mixture,
    Uniform,
    /// Generalized Pareto with --xi and --sigma
    Gpd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CaseArg {
    Spatial,
    Temporal,
    Spacetime,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the mixture on a regular grid and write a dataset
    Simulate {
        #[arg(long, value_delimiter = ',', default_values_t = [0.15, 0.17, 0.18, 0.5])]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 0.4)]
        range_s: f64,
        #[arg(long, default_value_t = 0.4)]
        range_t: f64,
        #[arg(long, default_value_t = 5)]
        side: usize,
        #[arg(long, default_value_t = 5)]
        times: usize,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        #[arg(long, value_enum, default_value_t = OutMargin::Uniform)]
        margin: OutMargin,
        #[arg(long, default_value_t = 0.2)]
        xi: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit threshold-GPD margins and write the uniform-margin dataset
    FitMargins {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summary-statistic vector of a uniform-margin dataset (JSON)
    Featurize {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulation campaign plus one forest per parameter
    Train {
        /// Uniform-margin dataset whose layout the campaign reproduces
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        campaign_size: Option<usize>,
        #[arg(long)]
        trees: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        training_csv: Option<PathBuf>,
    },
    /// Point estimate of θ from a trained model
    Estimate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Point estimate with replicate-bootstrap intervals
    Bootstrap {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form limiting χ for given weights
    TheoryChi {
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[arg(long, value_enum, default_value_t = CaseArg::All)]
        case: CaseArg,
    },
    /// Binned empirical χ with optional model overlay (CSV)
    ChiCurves {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.9, 0.95])]
        taus: Vec<f64>,
        /// Model weights for the overlay column
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.4)]
        range_s: f64,
        #[arg(long, default_value_t = 0.4)]
        range_t: f64,
        #[arg(long, default_value_t = 20000)]
        model_samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Download NWIS daily discharge
    FetchUsgs {
        #[arg(long, value_delimiter = ',')]
        stations: Vec<String>,
        #[arg(long)]
        start: NaiveDate,
        #[arg(long)]
        end: NaiveDate,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full streamflow study from --config
    RunStudy {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.threads {
        Some(t) => with_threads(t, || dispatch(&cli)),
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn settings(cli: &Cli) -> Result<StudyConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?
        }
        None => StudyConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seeds = StudySeeds::from_master(s);
    }
    Ok(cfg)
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_json<T: serde::Serialize>(out: &Option<PathBuf>, v: &T) -> Result<()> {
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn weights(lambda: &[f64]) -> Result<[f64; 4]> {
    lambda
        .try_into()
        .map_err(|_| PipelineError::Usage("--lambda takes four comma-separated weights".into()))
}

fn load_model(p: &Path) -> Result<ForestSet> {
    let f = File::open(p).map_err(|e| PipelineError::Preprocess(format!("cannot open {}: {e}", p.display())))?;
    Ok(ForestSet::read(std::io::BufReader::new(f))?)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let exec = Exec::Parallel;
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Simulate {
            lambda,
            range_s,
            range_t,
            side,
            times,
            replicates,
            margin,
            xi,
            sigma,
            out,
        } => {
            let p = MixtureParams::new(weights(lambda)?, *range_s, *range_t)?;
            let layout = SpaceTimeLayout::grid(*side, *times, *replicates)?;
            let d = simulate_mixture(&p, &layout, seed)?;
            let d = match margin {
                OutMargin::Mixture => d,
                OutMargin::Uniform => transform_margins(&d, &MarginTarget::Uniform)?,
                OutMargin::Gpd => {
                    let m = MarginalModel::homogeneous(layout.n_sites(), GpdParams::new(0.0, *sigma, *xi)?);
                    transform_margins(&d, &MarginTarget::Model(m))?
                }
            };
            write_dataset(out, &DatasetFile::new(d, None))
        }
        Command::FitMargins { data, tau, out } => {
            let f = read_dataset(data)?;
            let fit = fit_margins_and_pit(&f.dataset, *tau, &GpdFitConfig::default())?;
            let mut u = DatasetFile::new(fit.uniform, Some(f.site_ids));
            u.meta.replicate_labels = f.meta.replicate_labels;
            u.meta.projection = f.meta.projection;
            write_dataset(out, &u)?;
            serde_json::to_writer_pretty(
                BufWriter::new(File::create(out.with_extension("margins.json"))?),
                &fit.model,
            )?;
            let mut w = csv::Writer::from_path(out.with_extension("qq.csv"))?;
            w.write_record(["theoretical", "empirical"])?;
            for q in &fit.qq {
                w.write_record([format!("{}", q.theoretical), format!("{}", q.empirical)])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Featurize { data, out } => {
            let cfg = settings(cli)?;
            let f = read_dataset(data)?;
            emit_json(out, &featurize(&f.dataset, &cfg.features)?)
        }
        Command::Train {
            data,
            campaign_size,
            trees,
            out,
            training_csv,
        } => {
            let cfg = settings(cli)?;
            let f = read_dataset(data)?;
            let layout = &f.dataset.layout;
            let s = campaign_size.unwrap_or(cfg.campaign_size);
            let ts = run_campaign(&cfg.prior, layout, s, cfg.seeds.campaign, &cfg.features, exec)?;
            if let Some(p) = training_csv {
                ts.write_csv(BufWriter::new(File::create(p)?))?;
            }
            let fc = ForestConfig {
                seed: cfg.seeds.forest,
                n_trees: trees.unwrap_or(cfg.forest.n_trees),
                ..cfg.forest
            };
            let fs = train_forest_set(&ts, &cfg.features, &fc, exec)?;
            fs.write(BufWriter::new(File::create(out)?))?;
            serde_json::to_writer_pretty(BufWriter::new(File::create(out.with_extension("json"))?), &fs.sidecar())?;
            Ok(())
        }
        Command::Estimate { model, data, out } => {
            let fs = load_model(model)?;
            let f = read_dataset(data)?;
            emit_json(out, &estimate(&fs, &f.dataset)?)
        }
        Command::Bootstrap {
            model,
            data,
            resamples,
            out,
        } => {
            let cfg = settings(cli)?;
            let fs = load_model(model)?;
            let f = read_dataset(data)?;
            let b = resamples.unwrap_or(cfg.bootstrap_resamples);
            let est = bootstrap_ci(
                &fs,
                &f.dataset,
                b,
                cfg.seeds.bootstrap,
                exec,
                CiConvention::IncludeOriginal,
            )?;
            emit_json(out, &est)
        }
        Command::TheoryChi { lambda, case } => {
            let w = weights(lambda)?;
            let cases: Vec<PairCase> = match case {
                CaseArg::Spatial => vec![PairCase::Spatial],
                CaseArg::Temporal => vec![PairCase::Temporal],
                CaseArg::Spacetime => vec![PairCase::SpaceTime],
                CaseArg::All => PairCase::ALL.to_vec(),
            };
            let mut out = std::io::stdout().lock();
            writeln!(out, "case\tdominant\tchi")?;
            for c in cases {
                let r = theorem1_chi(w, c)?;
                writeln!(out, "{}\t{}\t{}", c.name(), r.dominant + 1, r.chi)?;
            }
            Ok(())
        }
        Command::ChiCurves {
            data,
            taus,
            lambda,
            range_s,
            range_t,
            model_samples,
            out,
        } => {
            let cfg = settings(cli)?;
            let f = read_dataset(data)?;
            let grid = &cfg.features.grid;
            let model = match lambda {
                Some(l) => Some(MixtureParams::new(weights(l)?, *range_s, *range_t)?),
                None => None,
            };
            let centers: Vec<(f64, f64)> = (0..grid.n_bins()).map(|b| grid.center(b)).collect();
            let mut w = csv::Writer::from_writer(writer(out)?);
            w.write_record([
                "tau",
                "h_s_bin_center",
                "h_t_bin_center",
                "chi_raw",
                "chi_smooth",
                "n_pairs",
                "chi_model",
            ])?;
            let opt = |v: f64| if v.is_finite() { format!("{v}") } else { String::new() };
            for (k, &tau) in taus.iter().enumerate() {
                let s = smooth_surface_with(&empirical_chi(&f.dataset, tau, grid)?, cfg.features.kappa)?;
                let m = match &model {
                    Some(p) => model_chi_curve(
                        p,
                        &centers,
                        tau,
                        *model_samples,
                        exceedmix::rng::derive_seed(seed, &[k as u64]),
                        exec,
                    )?,
                    None => vec![f64::NAN; centers.len()],
                };
                let sm = s.smooth.clone().unwrap_or_default();
                for (b, &(hs, ht)) in centers.iter().enumerate() {
                    w.write_record([
                        format!("{tau}"),
                        format!("{hs}"),
                        format!("{ht}"),
                        opt(s.raw[b]),
                        opt(sm[b]),
                        s.counts[b].to_string(),
                        opt(m[b]),
                    ])?;
                }
            }
            w.flush()?;
            Ok(())
        }
        Command::FetchUsgs {
            stations,
            start,
            end,
            cache_dir,
            out,
        } => {
            let cfg = settings(cli)?;
            let mut client = cfg.client(cli.offline);
            if cache_dir.is_some() {
                client.cache_dir = cache_dir.clone();
            }
            let report = client.fetch(stations, *start, *end)?;
            std::fs::create_dir_all(out)?;
            for s in &report.series {
                std::fs::write(out.join(format!("{}.csv", s.id)), s.to_normalized_csv())?;
            }
            serde_json::to_writer_pretty(
                BufWriter::new(File::create(out.join("fetch_report.json"))?),
                &report.failures,
            )?;
            if report.series.is_empty() && !stations.is_empty() {
                return Err(PipelineError::Preprocess("no station could be fetched".into()));
            }
            Ok(())
        }
        Command::RunStudy { out } => {
            if cli.config.is_none() {
                return Err(PipelineError::Usage("run-study needs --config".into()));
            }
            let cfg = settings(cli)?;
            let r = run_study(&cfg, out, cli.offline, exec)?;
            let e = &r.estimate.estimate;
            println!(
                "lambda = {:?}, rho_s = {}, rho_t = {}, dominant = {}",
                e.weights(),
                e.range_s,
                e.range_t,
                e.dominant_index() + 1
            );
            Ok(())
        }
    }
}
