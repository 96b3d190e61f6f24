use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulators::{Margin, ProcessSample, SpaceTimeLayout};

/// Replicate × site × time values on a layout. Missing cells are NaN and
/// are skipped by every pair statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub layout: SpaceTimeLayout,
    pub values: Vec<f64>,
    pub margin: Margin,
}

impl Dataset {
    pub fn new(layout: SpaceTimeLayout, values: Vec<f64>, margin: Margin) -> Result<Self> {
        if values.len() != layout.n_cells() {
            return Err(Error::Data(format!(
                "{} values for a layout with {} cells",
                values.len(),
                layout.n_cells()
            )));
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::Data("dataset contains infinite values".into()));
        }
        Ok(Self { layout, values, margin })
    }

    pub fn get(&self, r: usize, s: usize, t: usize) -> f64 {
        self.values[self.layout.index(r, s, t)]
    }

    pub fn replicates(&self) -> usize {
        self.layout.replicates
    }

    /// Values of replicate `r`, laid out `s·T + t`.
    pub fn replicate(&self, r: usize) -> &[f64] {
        let np = self.layout.n_points();
        &self.values[r * np..(r + 1) * np]
    }

    pub fn n_missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    /// New dataset made of the given replicates, in order (repeats allowed).
    pub fn select_replicates(&self, idx: &[usize]) -> Result<Self> {
        let np = self.layout.n_points();
        let mut values = Vec::with_capacity(idx.len() * np);
        for &r in idx {
            if r >= self.replicates() {
                return Err(Error::Data(format!("replicate {r} out of range")));
            }
            values.extend_from_slice(self.replicate(r));
        }
        Ok(Self {
            layout: self.layout.with_replicates(idx.len()),
            values,
            margin: self.margin,
        })
    }

    /// Fails unless the margin tag is uniform.
    pub fn require_uniform(&self) -> Result<()> {
        match self.margin {
            Margin::Uniform => Ok(()),
            other => Err(Error::Margin {
                expected: "uniform".into(),
                found: other.name().into(),
            }),
        }
    }
}

impl From<ProcessSample> for Dataset {
    fn from(p: ProcessSample) -> Self {
        Self {
            layout: p.layout,
            values: p.values,
            margin: p.margin,
        }
    }
}
