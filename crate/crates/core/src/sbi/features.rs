use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mixture::Dataset;
use crate::simulators::SpaceTimeLayout;
use crate::taildep::{smooth_surface_with, BinStats, ChiSurface, CorrSurface, PairBinGrid, PairIndex, DEFAULT_KAPPA};

/// Summary-statistic settings. The feature vector is, in order: the
/// smoothed χ surface at each level in `taus` (bins row-major, spatial
/// major), then the imputed conditional exceedance correlation surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub grid: PairBinGrid,
    pub taus: Vec<f64>,
    pub q0: f64,
    pub kappa: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            grid: PairBinGrid::default(),
            taus: vec![0.5, 0.9],
            q0: 0.5,
            kappa: DEFAULT_KAPPA,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() || self.taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::Parameter(format!(
                "feature levels must lie in (0,1): {:?}",
                self.taus
            )));
        }
        if !(self.q0 >= 0.0 && self.q0 < 1.0) {
            return Err(Error::Parameter(format!(
                "correlation threshold {} not in [0,1)",
                self.q0
            )));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Parameter(format!(
                "smoothing penalty {} must be positive",
                self.kappa
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.taus.len() + 1) * self.grid.n_bins()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Column names, in feature order.
    pub fn names(&self) -> Vec<String> {
        let nb = self.grid.n_bins();
        let mut out = Vec::with_capacity(self.len());
        for t in &self.taus {
            out.extend((0..nb).map(|b| format!("chi_{t}_b{b}")));
        }
        out.extend((0..nb).map(|b| format!("corr_b{b}")));
        out
    }

    /// Fingerprint of everything that changes the meaning of a feature.
    pub fn schema_hash(&self) -> u64 {
        let desc = format!(
            "exceedmix-features-v1;{};taus={:?};q0={:?};kappa={:?}",
            self.grid.describe(),
            self.taus,
            self.q0,
            self.kappa
        );
        let digest = Sha256::digest(desc.as_bytes());
        u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema: u64,
}

/// Feature extraction bound to one layout. Statistics are additive over
/// replicates, so bootstrap resamples can be featurized by summing cached
/// per-replicate statistics.
#[derive(Debug, Clone)]
pub struct Featurizer {
    cfg: FeatureConfig,
    index: PairIndex,
    layout: SpaceTimeLayout,
}

impl Featurizer {
    pub fn new(cfg: &FeatureConfig, layout: &SpaceTimeLayout) -> Result<Self> {
        cfg.validate()?;
        let index = PairIndex::new(layout, &cfg.grid)?;
        if index.is_empty() {
            return Err(Error::Feature("no point pair falls in any lag bin".into()));
        }
        Ok(Self {
            cfg: cfg.clone(),
            index,
            layout: layout.with_replicates(1),
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.cfg
    }

    fn check(&self, d: &Dataset) -> Result<()> {
        d.require_uniform()?;
        if d.layout.with_replicates(1) != self.layout {
            return Err(Error::Data("dataset layout differs from the featurizer layout".into()));
        }
        Ok(())
    }

    /// Statistics of each replicate, in replicate order.
    pub fn replicate_stats(&self, d: &Dataset) -> Result<Vec<BinStats>> {
        self.check(d)?;
        Ok((0..d.replicates())
            .map(|r| BinStats::replicate(d.replicate(r), &self.index, &self.cfg.taus, self.cfg.q0))
            .collect())
    }

    /// Sum of the selected replicates' statistics, in the given order.
    pub fn pool(&self, stats: &[BinStats], idx: impl IntoIterator<Item = usize>) -> BinStats {
        let mut total = BinStats::zeros(&self.cfg.taus, self.cfg.q0, self.index.n_bins());
        for r in idx {
            total.add(&stats[r]);
        }
        total
    }

    pub fn from_stats(&self, st: &BinStats) -> Result<FeatureVector> {
        let grid = &self.cfg.grid;
        let mut values = Vec::with_capacity(self.cfg.len());
        for (l, &tau) in self.cfg.taus.iter().enumerate() {
            let raw = ChiSurface::from_counts(tau, grid, st.chi_level(l))
                .map_err(|_| Error::Feature("every lag bin is empty".into()))?;
            let s = smooth_surface_with(&raw, self.cfg.kappa)?;
            values.extend(s.smooth.expect("smoothed surface"));
        }
        let corr = CorrSurface::from_sums(self.cfg.q0, &st.corr).imputed(grid);
        if corr.iter().all(|v| v.is_nan()) {
            // too few joint exceedances anywhere: report no correlation
            log::debug!("no lag bin has enough pairs for a correlation; using 0");
            values.extend(std::iter::repeat_n(0.0, corr.len()));
        } else {
            values.extend(corr);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Feature("non-finite feature".into()));
        }
        Ok(FeatureVector {
            values,
            schema: self.cfg.schema_hash(),
        })
    }

    pub fn featurize(&self, d: &Dataset) -> Result<FeatureVector> {
        let stats = self.replicate_stats(d)?;
        self.from_stats(&self.pool(&stats, 0..stats.len()))
    }
}

/// Feature vector of a uniform-margin dataset.
pub fn featurize(d: &Dataset, cfg: &FeatureConfig) -> Result<FeatureVector> {
    Featurizer::new(cfg, &d.layout)?.featurize(d)
}
