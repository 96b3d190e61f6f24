use super::chi::dataset_stats;
use super::grid::{PairBinGrid, PairIndex};
use super::stats::CorrSums;
use crate::error::Result;
use crate::mixture::Dataset;

/// Bins with fewer qualifying pairs than this are reported missing.
pub const MIN_CORR_PAIRS: u64 = 30;

/// Binned correlation of pairs with both members above `q0`; NaN marks
/// missing bins.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrSurface {
    pub q0: f64,
    pub values: Vec<f64>,
    pub counts: Vec<u64>,
}

impl CorrSurface {
    pub fn from_sums(q0: f64, sums: &[CorrSums]) -> Self {
        Self {
            q0,
            values: sums
                .iter()
                .map(|s| s.corr(MIN_CORR_PAIRS).unwrap_or(f64::NAN))
                .collect(),
            counts: sums.iter().map(|s| s.n).collect(),
        }
    }

    /// Missing bins take the value of the nearest populated bin center
    /// (ties to the lower bin index). All-missing stays all-missing.
    pub fn imputed(&self, grid: &PairBinGrid) -> Vec<f64> {
        let populated: Vec<usize> = (0..self.values.len()).filter(|&b| self.values[b].is_finite()).collect();
        (0..self.values.len())
            .map(|b| {
                if self.values[b].is_finite() {
                    return self.values[b];
                }
                let (hs, ht) = grid.center(b);
                let mut best: Option<(f64, usize)> = None;
                for &p in &populated {
                    let (ps, pt) = grid.center(p);
                    let d = (ps - hs).powi(2) + (pt - ht).powi(2);
                    if best.is_none_or(|(bd, _)| d < bd - 1e-15) {
                        best = Some((d, p));
                    }
                }
                best.map_or(f64::NAN, |(_, p)| self.values[p])
            })
            .collect()
    }
}

/// Per-bin Pearson correlation over pairs with both values above `q0`,
/// each pair entered in both orders.
pub fn conditional_exceedance_corr(d: &Dataset, q0: f64, grid: &PairBinGrid) -> Result<CorrSurface> {
    let index = PairIndex::new(&d.layout, grid)?;
    let st = dataset_stats(d, &index, &[], q0)?;
    Ok(CorrSurface::from_sums(q0, &st.corr))
}
