use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulators::SpaceTimeLayout;

/// Rectangular binning of point pairs by spatial and temporal lag. Bins are
/// half-open, `[e_k, e_{k+1})`, and numbered row-major with the spatial bin
/// as the major index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBinGrid {
    spatial: Vec<f64>,
    temporal: Vec<f64>,
}

fn check_edges(name: &str, e: &[f64]) -> Result<()> {
    if e.len() < 2 {
        return Err(Error::Parameter(format!("{name} bin edges need at least two values")));
    }
    if e.iter().any(|x| !x.is_finite()) || e.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter(format!(
            "{name} bin edges must increase strictly: {e:?}"
        )));
    }
    if e[0] < 0.0 {
        return Err(Error::Parameter(format!("{name} bin edges must be non-negative")));
    }
    Ok(())
}

impl Default for PairBinGrid {
    /// Five spatial bins on [0, 0.5) and three temporal bins on [0, 0.3).
    fn default() -> Self {
        let edges = |n: usize| (0..=n).map(|i| i as f64 / 10.0).collect();
        Self {
            spatial: edges(5),
            temporal: edges(3),
        }
    }
}

impl PairBinGrid {
    pub fn new(spatial: Vec<f64>, temporal: Vec<f64>) -> Result<Self> {
        check_edges("spatial", &spatial)?;
        check_edges("temporal", &temporal)?;
        Ok(Self { spatial, temporal })
    }

    pub fn spatial_edges(&self) -> &[f64] {
        &self.spatial
    }

    pub fn temporal_edges(&self) -> &[f64] {
        &self.temporal
    }

    pub fn n_spatial(&self) -> usize {
        self.spatial.len() - 1
    }

    pub fn n_temporal(&self) -> usize {
        self.temporal.len() - 1
    }

    pub fn n_bins(&self) -> usize {
        self.n_spatial() * self.n_temporal()
    }

    pub fn spatial_centers(&self) -> Vec<f64> {
        self.spatial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn temporal_centers(&self) -> Vec<f64> {
        self.temporal.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// `(h_S, h_T)` bin center of bin `b`.
    pub fn center(&self, b: usize) -> (f64, f64) {
        let (i, j) = (b / self.n_temporal(), b % self.n_temporal());
        (
            0.5 * (self.spatial[i] + self.spatial[i + 1]),
            0.5 * (self.temporal[j] + self.temporal[j + 1]),
        )
    }

    /// Bin holding lags `(hs, ht)`, or `None` outside the grid.
    pub fn bin(&self, hs: f64, ht: f64) -> Option<usize> {
        let find = |e: &[f64], x: f64| {
            if x < e[0] || x >= e[e.len() - 1] {
                return None;
            }
            Some(e.partition_point(|&v| v <= x) - 1)
        };
        Some(find(&self.spatial, hs)? * self.n_temporal() + find(&self.temporal, ht)?)
    }

    /// Stable fingerprint of the edges, used in feature schemas.
    pub fn describe(&self) -> String {
        format!("spatial={:?};temporal={:?}", self.spatial, self.temporal)
    }
}

/// Every unordered pair of distinct points of one replicate whose lags fall
/// in the grid, with its bin.
#[derive(Debug, Clone)]
pub struct PairIndex {
    pairs: Vec<(u32, u32, u32)>,
    n_points: usize,
    n_bins: usize,
}

impl PairIndex {
    pub fn new(layout: &SpaceTimeLayout, grid: &PairBinGrid) -> Result<Self> {
        let np = layout.n_points();
        if np > u32::MAX as usize {
            return Err(Error::Data("layout too large for the pair index".into()));
        }
        let nt = layout.n_times();
        let mut pairs = Vec::new();
        for p in 0..np {
            let (sp, tp) = (p / nt, p % nt);
            for q in p + 1..np {
                let (sq, tq) = (q / nt, q % nt);
                let hs = layout.spatial_lag(sp, sq);
                let ht = (layout.times[tp] - layout.times[tq]).abs();
                if let Some(b) = grid.bin(hs, ht) {
                    pairs.push((p as u32, q as u32, b as u32));
                }
            }
        }
        Ok(Self {
            pairs,
            n_points: np,
            n_bins: grid.n_bins(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn pairs(&self) -> &[(u32, u32, u32)] {
        &self.pairs
    }

    /// Number of indexed pairs per bin.
    pub fn bin_sizes(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_bins];
        for &(_, _, b) in &self.pairs {
            c[b as usize] += 1;
        }
        c
    }
}
