use std::io::{Read, Write};

use super::features::{FeatureConfig, Featurizer};
use super::prior::{sample_prior, PriorSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mixture::{eta_to_theta, transform_margins, MarginTarget, MixtureSimulator};
use crate::rng;
use crate::simulators::SpaceTimeLayout;
use crate::taildep::csv_err;

/// Smallest campaign accepted by [`run_campaign`].
pub const MIN_CAMPAIGN_ROWS: usize = 100;
/// Attempts per row before the campaign fails.
pub const MAX_ROW_ATTEMPTS: u64 = 10;

/// Simulated (features, η) pairs, one row per prior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<[f64; 5]>,
    pub schema: u64,
}

impl TrainingSet {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<[f64; 5]>, schema: u64) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} target rows",
                features.len(),
                targets.len()
            )));
        }
        let p = features.first().map_or(0, Vec::len);
        if features.iter().any(|f| f.len() != p) {
            return Err(Error::Data("feature rows differ in length".into()));
        }
        if features
            .iter()
            .flatten()
            .chain(targets.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Data("training set contains non-finite values".into()));
        }
        Ok(Self {
            features,
            targets,
            schema,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn target(&self, j: usize) -> Vec<f64> {
        self.targets.iter().map(|t| t[j]).collect()
    }

    /// Header `f0..f{p-1},eta1..eta5`; values use shortest round-trip
    /// formatting, so reading back is lossless.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.n_features()).map(|i| format!("f{i}")).collect();
        header.extend((1..=5).map(|j| format!("eta{j}")));
        w.write_record(&header).map_err(csv_err)?;
        for (f, t) in self.features.iter().zip(&self.targets) {
            w.write_record(f.iter().chain(t).map(|v| format!("{v}")))
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`TrainingSet::write_csv`]; the feature
    /// columns must match `cfg`.
    pub fn read_csv<R: Read>(input: R, cfg: &FeatureConfig) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let ncol = r.headers().map_err(csv_err)?.len();
        if ncol != cfg.len() + 5 {
            return Err(Error::Data(format!("expected {} columns, found {ncol}", cfg.len() + 5)));
        }
        let mut features = Vec::new();
        let mut targets = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let row: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Data(format!("row {}: {e}", i + 1)))?;
            if row.len() != ncol {
                return Err(Error::Data(format!("row {} has {} fields", i + 1, row.len())));
            }
            let (f, t) = row.split_at(cfg.len());
            features.push(f.to_vec());
            targets.push(t.try_into().expect("five targets"));
        }
        Self::new(features, targets, cfg.schema_hash())
    }
}

/// One campaign row: prior draw, mixture simulation, exact uniform margins,
/// features. Failed attempts are logged and redrawn.
fn campaign_row(
    spec: &PriorSpec,
    layout: &SpaceTimeLayout,
    featurizer: &Featurizer,
    seed: u64,
    i: u64,
) -> Result<(Vec<f64>, [f64; 5])> {
    let mut last = None;
    for a in 0..MAX_ROW_ATTEMPTS {
        let attempt = || -> Result<(Vec<f64>, [f64; 5])> {
            let eta = sample_prior(spec, rng::derive_seed(seed, &[i, a, 0]))?;
            let p = eta_to_theta(&eta)?;
            let d =
                MixtureSimulator::new(&p, layout)?.simulate(rng::derive_seed(seed, &[i, a, 1]), Exec::Sequential)?;
            let u = transform_margins(&d, &MarginTarget::Uniform)?;
            Ok((featurizer.featurize(&u)?.values, eta.0))
        };
        match attempt() {
            Ok(row) => return Ok(row),
            Err(e @ Error::Prior(_)) => return Err(e),
            Err(e) => {
                log::warn!("campaign row {i}, attempt {a}: {e}; redrawing");
                last = Some(e);
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

/// `s` independent training rows on `layout`. Row `i` depends only on
/// `(seed, i)`, so the result is identical for any thread count.
pub fn run_campaign(
    spec: &PriorSpec,
    layout: &SpaceTimeLayout,
    s: usize,
    seed: u64,
    cfg: &FeatureConfig,
    exec: Exec,
) -> Result<TrainingSet> {
    if s < MIN_CAMPAIGN_ROWS {
        return Err(Error::Parameter(format!(
            "campaign needs at least {MIN_CAMPAIGN_ROWS} rows, got {s}"
        )));
    }
    let featurizer = Featurizer::new(cfg, layout)?;
    let rows = exec.try_map(s, |i| campaign_row(spec, layout, &featurizer, seed, i as u64))?;
    let (features, targets) = rows.into_iter().unzip();
    TrainingSet::new(features, targets, cfg.schema_hash())
}
