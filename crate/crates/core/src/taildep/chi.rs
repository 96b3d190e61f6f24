use std::io::Write;

use serde::{Deserialize, Serialize};

use super::grid::{PairBinGrid, PairIndex};
use super::smooth::{smooth_values, DEFAULT_KAPPA};
use super::stats::{BinStats, ChiCounts};
use crate::error::{Error, Result};
use crate::mixture::Dataset;

/// Binned empirical χ at one level. Missing bins hold NaN in `raw`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSurface {
    pub tau: f64,
    pub grid: PairBinGrid,
    pub raw: Vec<f64>,
    /// Filled in by [`smooth_surface`].
    pub smooth: Option<Vec<f64>>,
    /// Pairs with both members observed, per bin.
    pub counts: Vec<u64>,
}

impl ChiSurface {
    pub fn from_counts(tau: f64, grid: &PairBinGrid, counts: &[ChiCounts]) -> Result<Self> {
        if counts.iter().all(|c| c.pairs == 0) {
            return Err(Error::Diagnostics("no pairs fall in any bin".into()));
        }
        Ok(Self {
            tau,
            grid: grid.clone(),
            raw: counts.iter().map(|c| c.chi().unwrap_or(f64::NAN)).collect(),
            smooth: None,
            counts: counts.iter().map(|c| c.pairs).collect(),
        })
    }

    /// CSV rows `tau,h_s_bin_center,h_t_bin_center,chi_raw,chi_smooth,n_pairs`;
    /// missing values are empty fields.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        if header {
            w.write_record([
                "tau",
                "h_s_bin_center",
                "h_t_bin_center",
                "chi_raw",
                "chi_smooth",
                "n_pairs",
            ])
            .map_err(csv_err)?;
        }
        let opt = |v: f64| if v.is_finite() { format!("{v}") } else { String::new() };
        for b in 0..self.raw.len() {
            let (hs, ht) = self.grid.center(b);
            let sm = self.smooth.as_ref().map_or(f64::NAN, |s| s[b]);
            w.write_record([
                format!("{}", self.tau),
                format!("{hs}"),
                format!("{ht}"),
                opt(self.raw[b]),
                opt(sm),
                self.counts[b].to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}

/// Per-bin statistics summed over all replicates of a uniform dataset.
pub fn dataset_stats(d: &Dataset, index: &PairIndex, levels: &[f64], q0: f64) -> Result<BinStats> {
    d.require_uniform()?;
    if index.n_points() != d.layout.n_points() {
        return Err(Error::Data("pair index built for a different layout".into()));
    }
    let mut total = BinStats::zeros(levels, q0, index.n_bins());
    for r in 0..d.replicates() {
        total.add(&BinStats::replicate(d.replicate(r), index, levels, q0));
    }
    Ok(total)
}

/// Binned `χ̂ = 2·#both / (#first + #second)` over pairs within replicates.
pub fn empirical_chi(d: &Dataset, tau: f64, grid: &PairBinGrid) -> Result<ChiSurface> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Parameter(format!("level {tau} not in (0,1)")));
    }
    let index = PairIndex::new(&d.layout, grid)?;
    let st = dataset_stats(d, &index, &[tau], 0.5)?;
    ChiSurface::from_counts(tau, grid, st.chi_level(0))
}

/// Pair-count weighted spline smoothing; the result is clamped to [0, 1].
pub fn smooth_surface(raw: &ChiSurface) -> Result<ChiSurface> {
    smooth_surface_with(raw, DEFAULT_KAPPA)
}

pub fn smooth_surface_with(raw: &ChiSurface, kappa: f64) -> Result<ChiSurface> {
    let weights: Vec<f64> = raw.counts.iter().map(|&c| c as f64).collect();
    let s = smooth_values(&raw.grid, &raw.raw, &weights, kappa)?;
    let mut out = raw.clone();
    out.smooth = Some(s.into_iter().map(|v| v.clamp(0.0, 1.0)).collect());
    Ok(out)
}
