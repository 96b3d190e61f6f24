use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sites in the unit square, increasing times in [0, 1], and the number of
/// independent replicates. Cell `(r, s, t)` is stored at `(r·m + s)·T + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeLayout {
    pub sites: Vec<[f64; 2]>,
    pub times: Vec<f64>,
    pub replicates: usize,
}

impl SpaceTimeLayout {
    pub fn new(sites: Vec<[f64; 2]>, times: Vec<f64>, replicates: usize) -> Result<Self> {
        if sites.is_empty() || times.is_empty() || replicates == 0 {
            return Err(Error::Parameter("layout needs sites, times and replicates".into()));
        }
        for (i, a) in sites.iter().enumerate() {
            if !(a[0].is_finite() && a[1].is_finite()) {
                return Err(Error::Parameter(format!("site {i} has non-finite coordinates")));
            }
            if sites[..i].iter().any(|b| b == a) {
                return Err(Error::Parameter(format!("site {i} duplicates an earlier site")));
            }
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("times must be finite and strictly increasing".into()));
        }
        Ok(Self {
            sites,
            times,
            replicates,
        })
    }

    /// Regular `side × side` site grid and `n_times` equally spaced times on
    /// the unit cube.
    pub fn grid(side: usize, n_times: usize, replicates: usize) -> Result<Self> {
        let coord = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let sites = (0..side * side)
            .map(|k| [coord(k % side, side), coord(k / side, side)])
            .collect();
        let times = (0..n_times).map(|i| coord(i, n_times)).collect();
        Self::new(sites, times, replicates)
    }

    /// Regular grid with the given spacing between neighbouring sites and
    /// between consecutive times, starting at the origin.
    pub fn spaced_grid(side: usize, n_times: usize, spacing: f64, replicates: usize) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Parameter(format!("grid spacing {spacing} must be positive")));
        }
        let sites = (0..side * side)
            .map(|k| [(k % side) as f64 * spacing, (k / side) as f64 * spacing])
            .collect();
        let times = (0..n_times).map(|i| i as f64 * spacing).collect();
        Self::new(sites, times, replicates)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// Cells per replicate.
    pub fn n_points(&self) -> usize {
        self.sites.len() * self.times.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_points() * self.replicates
    }

    pub fn index(&self, r: usize, s: usize, t: usize) -> usize {
        (r * self.n_sites() + s) * self.n_times() + t
    }

    /// (x, y, t) of point `p = s·T + t`.
    pub fn point(&self, p: usize) -> [f64; 3] {
        let (s, t) = (p / self.n_times(), p % self.n_times());
        [self.sites[s][0], self.sites[s][1], self.times[t]]
    }

    pub fn spatial_lag(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.sites[a], self.sites[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }

    pub fn with_replicates(&self, replicates: usize) -> Self {
        Self {
            replicates,
            ..self.clone()
        }
    }
}
