//! The full streamflow workflow: fetch, preprocess, marginal fit, training
//! campaign, forests and bootstrap intervals.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use exceedmix::distributions::{GpdFitConfig, MarginalModel};
use exceedmix::rng::derive_seed;
use exceedmix::sbi::{
    bootstrap_ci, run_campaign, train_forest_set, CiConvention, EstimateWithCI, FeatureConfig, ForestConfig, PriorSpec,
};
use exceedmix::Exec;

use crate::error::{PipelineError, Result};
use crate::io::{write_dataset, DatasetFile, DatasetMeta};
use crate::margins::fit_margins_and_pit;
use crate::preprocess::{preprocess, PreprocessConfig, StationReport};
use crate::usgs::{FetchFailure, NwisClient, NWIS_DV_URL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySeeds {
    pub campaign: u64,
    pub forest: u64,
    pub bootstrap: u64,
}

impl StudySeeds {
    /// Independent seeds for each stage from one master seed.
    pub fn from_master(seed: u64) -> Self {
        Self {
            campaign: derive_seed(seed, &[1]),
            forest: derive_seed(seed, &[2]),
            bootstrap: derive_seed(seed, &[3]),
        }
    }
}

impl Default for StudySeeds {
    fn default() -> Self {
        Self::from_master(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub stations: Vec<String>,
    pub preprocess: PreprocessConfig,
    /// Marginal threshold level.
    pub tau: f64,
    pub features: FeatureConfig,
    pub prior: PriorSpec,
    pub forest: ForestConfig,
    pub campaign_size: usize,
    pub bootstrap_resamples: usize,
    pub seeds: StudySeeds,
    pub cache_dir: Option<PathBuf>,
    pub base_url: String,
    pub max_connections: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            stations: Vec::new(),
            preprocess: PreprocessConfig::default(),
            tau: 0.8,
            features: FeatureConfig::default(),
            prior: PriorSpec::default(),
            forest: ForestConfig::default(),
            campaign_size: 2000,
            bootstrap_resamples: 1000,
            seeds: StudySeeds::default(),
            cache_dir: None,
            base_url: NWIS_DV_URL.to_string(),
            max_connections: 4,
        }
    }
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(PipelineError::Config(format!("tau {} not in (0,1)", self.tau)));
        }
        if self.stations.is_empty() {
            return Err(PipelineError::Config("station list is empty".into()));
        }
        self.preprocess.validate()?;
        self.features.validate()?;
        Ok(())
    }

    /// Fetch window covering every season.
    pub fn date_range(&self) -> Result<(NaiveDate, NaiveDate)> {
        let p = &self.preprocess;
        let d = |y, (m, day): (u32, u32)| {
            NaiveDate::from_ymd_opt(y, m, day)
                .ok_or_else(|| PipelineError::Config(format!("invalid date {y}-{m}-{day}")))
        };
        Ok((d(p.start_year, p.season_start)?, d(p.end_year, p.season_end)?))
    }

    pub fn client(&self, offline: bool) -> NwisClient {
        NwisClient {
            base_url: self.base_url.clone(),
            cache_dir: self.cache_dir.clone(),
            offline,
            max_connections: self.max_connections,
            ..NwisClient::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub fetch_failures: Vec<FetchFailure>,
    pub stations: Vec<StationReport>,
    pub sites_used: Vec<String>,
    pub replicates: usize,
    pub season_days: usize,
    pub forest_oob_r2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub estimate: EstimateWithCI,
    pub margins: MarginalModel,
    pub report: StudyReport,
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), v)?;
    Ok(())
}

/// Runs the whole study and writes its artifacts to `out`:
/// `estimate.json`, `margins.json`, `qq.csv`, `report.json`, the
/// standardized and uniform datasets, the training set and the forests.
pub fn run_study(cfg: &StudyConfig, out: &Path, offline: bool, exec: Exec) -> Result<StudyOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let (start, end) = cfg.date_range()?;
    let fetched = cfg.client(offline).fetch(&cfg.stations, start, end)?;
    for f in &fetched.failures {
        log::warn!("{}: {}", f.station, f.message);
    }
    if fetched.series.is_empty() {
        return Err(PipelineError::Preprocess("no station could be fetched".into()));
    }
    log::info!(
        "fetched {} stations ({} from cache)",
        fetched.series.len(),
        fetched.cache_hits
    );

    let pre = preprocess(&fetched.series, &cfg.preprocess)?;
    let mut data_file = DatasetFile::new(pre.dataset.clone(), Some(pre.site_ids.clone()));
    data_file.meta.replicate_labels = Some(pre.years.clone());
    data_file.meta.projection = Some(pre.projection);
    write_dataset(&out.join("standardized.csv"), &data_file)?;

    let fit = fit_margins_and_pit(&pre.dataset, cfg.tau, &GpdFitConfig::default())?;
    write_json(&out.join("margins.json"), &fit.model)?;
    let mut qq = csv::Writer::from_path(out.join("qq.csv"))?;
    qq.write_record(["theoretical", "empirical"])?;
    for p in &fit.qq {
        qq.write_record([format!("{}", p.theoretical), format!("{}", p.empirical)])?;
    }
    qq.flush()?;
    let mut uniform_file = DatasetFile::new(fit.uniform.clone(), Some(pre.site_ids.clone()));
    uniform_file.meta = DatasetMeta {
        margin: fit.uniform.margin,
        ..data_file.meta.clone()
    };
    write_dataset(&out.join("uniform.csv"), &uniform_file)?;

    let layout = fit.uniform.layout.clone();
    log::info!(
        "training campaign: {} simulations of {} sites x {} days x {} years",
        cfg.campaign_size,
        layout.n_sites(),
        layout.n_times(),
        layout.replicates
    );
    let ts = run_campaign(
        &cfg.prior,
        &layout,
        cfg.campaign_size,
        cfg.seeds.campaign,
        &cfg.features,
        exec,
    )?;
    ts.write_csv(BufWriter::new(File::create(out.join("training.csv"))?))?;
    let forest_cfg = ForestConfig {
        seed: cfg.seeds.forest,
        ..cfg.forest.clone()
    };
    let fs = train_forest_set(&ts, &cfg.features, &forest_cfg, exec)?;
    fs.write(BufWriter::new(File::create(out.join("model.bin"))?))?;
    write_json(&out.join("model.json"), &fs.sidecar())?;

    let est = bootstrap_ci(
        &fs,
        &fit.uniform,
        cfg.bootstrap_resamples,
        cfg.seeds.bootstrap,
        exec,
        CiConvention::IncludeOriginal,
    )?;
    write_json(&out.join("estimate.json"), &est)?;

    let report = StudyReport {
        fetch_failures: fetched.failures,
        stations: pre.report,
        sites_used: pre.site_ids,
        replicates: layout.replicates,
        season_days: layout.n_times(),
        forest_oob_r2: fs.models.iter().map(|m| m.meta.oob_r2).collect(),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(StudyOutput {
        estimate: est,
        margins: fit.model,
        report,
    })
}
