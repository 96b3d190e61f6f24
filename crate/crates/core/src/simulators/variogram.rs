use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariogramMode {
    /// Dependence over space only; independent across time indices.
    SpatialOnly,
    /// Dependence over time only; independent across sites.
    TemporalOnly,
    SpaceTime,
}

/// Power variogram `γ(h_S, h_T) = (h_S/ρ_S)^α + (h_T/ρ_T)^α`, read as
/// `Var{ε(a) − ε(b)}` of the underlying Gaussian field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramSpec {
    pub range_s: f64,
    pub range_t: f64,
    pub alpha: f64,
    pub mode: VariogramMode,
}

impl VariogramSpec {
    pub fn new(range_s: f64, range_t: f64, alpha: f64, mode: VariogramMode) -> Result<Self> {
        if !(range_s > 0.0 && range_s.is_finite() && range_t > 0.0 && range_t.is_finite()) {
            return Err(Error::Parameter(format!(
                "ranges must be positive, got ({range_s}, {range_t})"
            )));
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Parameter(format!("alpha {alpha} not in (0, 2]")));
        }
        Ok(Self {
            range_s,
            range_t,
            alpha,
            mode,
        })
    }

    pub fn space_time(range_s: f64, range_t: f64) -> Result<Self> {
        Self::new(range_s, range_t, 1.0, VariogramMode::SpaceTime)
    }

    pub fn with_mode(self, mode: VariogramMode) -> Self {
        Self { mode, ..self }
    }

    /// Variogram at spatial lag `hs` and temporal lag `ht`. In the
    /// restricted modes the other lag is ignored: it indexes independent
    /// blocks rather than entering the variogram.
    pub fn gamma(&self, hs: f64, ht: f64) -> f64 {
        let s = (hs.abs() / self.range_s).powf(self.alpha);
        let t = (ht.abs() / self.range_t).powf(self.alpha);
        match self.mode {
            VariogramMode::SpatialOnly => s,
            VariogramMode::TemporalOnly => t,
            VariogramMode::SpaceTime => s + t,
        }
    }

    /// Variogram between two (x, y, t) points.
    pub fn gamma_points(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let hs = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        self.gamma(hs, a[2] - b[2])
    }
}
