//! Per-bin sufficient statistics of pair exceedances.
//!
//! Statistics of one replicate are additive across replicates, so any
//! resample of replicates is summarised by summing its members' statistics
//! in resample order, which reproduces a direct pass over the resampled
//! data bit for bit.

use super::grid::PairIndex;

/// Pair counts behind one empirical χ value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChiCounts {
    /// Pairs with both members observed.
    pub pairs: u64,
    /// Members above the level, counted over both members of every pair.
    pub exceed: u64,
    /// Pairs with both members above the level.
    pub both: u64,
}

impl ChiCounts {
    /// `2·#both / (#first + #second)`, or `None` without any exceedance.
    pub fn chi(&self) -> Option<f64> {
        (self.exceed > 0).then(|| 2.0 * self.both as f64 / self.exceed as f64)
    }
}

/// Double-entry moment sums over pairs with both members above `q₀`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CorrSums {
    pub n: u64,
    /// Σ(x + y)
    pub sum: f64,
    /// Σ(x² + y²)
    pub sum_sq: f64,
    /// Σxy
    pub sum_xy: f64,
}

impl CorrSums {
    /// Pearson correlation of the symmetrised pairs; `None` when fewer than
    /// `min_pairs` pairs or no spread.
    pub fn corr(&self, min_pairs: u64) -> Option<f64> {
        if self.n < min_pairs.max(2) {
            return None;
        }
        let m = 2.0 * self.n as f64;
        let mean = self.sum / m;
        let var = self.sum_sq / m - mean * mean;
        let cov = 2.0 * self.sum_xy / m - mean * mean;
        (var > 0.0).then(|| (cov / var).clamp(-1.0, 1.0))
    }
}

/// Statistics for every level and bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    pub levels: Vec<f64>,
    pub q0: f64,
    /// `chi[l * n_bins + b]` for level `l`.
    pub chi: Vec<ChiCounts>,
    pub corr: Vec<CorrSums>,
}

impl BinStats {
    pub fn zeros(levels: &[f64], q0: f64, n_bins: usize) -> Self {
        Self {
            levels: levels.to_vec(),
            q0,
            chi: vec![ChiCounts::default(); levels.len() * n_bins],
            corr: vec![CorrSums::default(); n_bins],
        }
    }

    pub fn n_bins(&self) -> usize {
        self.corr.len()
    }

    /// Counts for level `l` across bins.
    pub fn chi_level(&self, l: usize) -> &[ChiCounts] {
        let n = self.n_bins();
        &self.chi[l * n..(l + 1) * n]
    }

    pub fn add(&mut self, other: &BinStats) {
        for (a, b) in self.chi.iter_mut().zip(&other.chi) {
            a.pairs += b.pairs;
            a.exceed += b.exceed;
            a.both += b.both;
        }
        for (a, b) in self.corr.iter_mut().zip(&other.corr) {
            a.n += b.n;
            a.sum += b.sum;
            a.sum_sq += b.sum_sq;
            a.sum_xy += b.sum_xy;
        }
    }

    /// Statistics of one replicate of uniform values (NaN = missing).
    pub fn replicate(values: &[f64], index: &PairIndex, levels: &[f64], q0: f64) -> Self {
        let nb = index.n_bins();
        let mut st = Self::zeros(levels, q0, nb);
        for &(p, q, b) in index.pairs() {
            let (x, y) = (values[p as usize], values[q as usize]);
            if x.is_nan() || y.is_nan() {
                continue;
            }
            let b = b as usize;
            for (l, &lev) in levels.iter().enumerate() {
                let c = &mut st.chi[l * nb + b];
                let (ex, ey) = (x > lev, y > lev);
                c.pairs += 1;
                c.exceed += ex as u64 + ey as u64;
                c.both += (ex && ey) as u64;
            }
            if x > q0 && y > q0 {
                let c = &mut st.corr[b];
                c.n += 1;
                c.sum += x + y;
                c.sum_sq += x * x + y * y;
                c.sum_xy += x * y;
            }
        }
        st
    }
}
