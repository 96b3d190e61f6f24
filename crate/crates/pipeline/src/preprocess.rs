//! Seasonal streamflow series to a replicate × site × day dataset.
//!
//! Each station's discharge is square-root transformed and standardized by
//! its own pooled quantiles, `(√Q − q.5) / (q.9 − q.1)`. Years are the
//! independent replicates; days within the season window are the time
//! axis, scaled to [0, 1].

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use exceedmix::distributions::empirical_quantile;
use exceedmix::mixture::Dataset;
use exceedmix::simulators::{Margin, SpaceTimeLayout};

use crate::error::{PipelineError, Result};
use crate::usgs::StationSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub start_year: i32,
    pub end_year: i32,
    /// Inclusive season window as (month, day).
    pub season_start: (u32, u32),
    pub season_end: (u32, u32),
    /// Fraction of season days a station must have observed.
    pub min_coverage: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            start_year: 1981,
            end_year: 2020,
            season_start: (5, 1),
            season_end: (7, 31),
            min_coverage: 0.5,
        }
    }
}

impl PreprocessConfig {
    /// Month-days of the season, read off a non-leap year.
    pub fn season_days(&self) -> Result<Vec<(u32, u32)>> {
        let md = |(m, d): (u32, u32)| {
            NaiveDate::from_ymd_opt(2001, m, d)
                .ok_or_else(|| PipelineError::Config(format!("invalid season date {m:02}-{d:02}")))
        };
        let (a, b) = (md(self.season_start)?, md(self.season_end)?);
        if b <= a {
            return Err(PipelineError::Config(
                "season window must contain at least two days".into(),
            ));
        }
        Ok(a.iter_days()
            .take_while(|d| *d <= b)
            .map(|d| (d.month(), d.day()))
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.end_year < self.start_year {
            return Err(PipelineError::Config("end year precedes start year".into()));
        }
        if !(self.min_coverage >= 0.0 && self.min_coverage <= 1.0) {
            return Err(PipelineError::Config(format!(
                "coverage {} not in [0,1]",
                self.min_coverage
            )));
        }
        self.season_days().map(|_| ())
    }
}

/// Affine map of longitude/latitude onto the unit square. Both axes share
/// one scale, so distances keep their proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub lon_min: f64,
    pub lat_min: f64,
    pub scale: f64,
}

impl Projection {
    pub fn bounding(coords: &[(f64, f64)]) -> Self {
        let lo = |f: fn(&(f64, f64)) -> f64| coords.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = |f: fn(&(f64, f64)) -> f64| coords.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let (lon_min, lat_min) = (lo(|c| c.0), lo(|c| c.1));
        let span = (hi(|c| c.0) - lon_min).max(hi(|c| c.1) - lat_min);
        Self {
            lon_min,
            lat_min,
            scale: if span > 0.0 { span } else { 1.0 },
        }
    }

    pub fn apply(&self, lon: f64, lat: f64) -> [f64; 2] {
        [(lon - self.lon_min) / self.scale, (lat - self.lat_min) / self.scale]
    }
}

/// Pooled quantiles used by the standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationScale {
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

impl StationScale {
    pub fn from_values(station: &str, z: &[f64]) -> Result<Self> {
        let q = |p| {
            empirical_quantile(z, p).map_err(|e| PipelineError::Station {
                station: station.into(),
                message: e.to_string(),
            })
        };
        let s = Self {
            q10: q(0.1)?,
            q50: q(0.5)?,
            q90: q(0.9)?,
        };
        if s.q90 <= s.q10 {
            return Err(PipelineError::Station {
                station: station.into(),
                message: "0.9 and 0.1 quantiles coincide (constant series)".into(),
            });
        }
        Ok(s)
    }

    pub fn standardize(&self, z: f64) -> f64 {
        (z - self.q50) / (self.q90 - self.q10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationReport {
    pub station: String,
    pub included: bool,
    pub coverage: f64,
    pub reason: Option<String>,
    pub scale: Option<StationScale>,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub dataset: Dataset,
    pub site_ids: Vec<String>,
    pub years: Vec<i32>,
    pub projection: Projection,
    pub report: Vec<StationReport>,
}

/// Square-root discharge of one station on the (year, season-day) grid.
fn seasonal_sqrt(s: &StationSeries, years: &[i32], days: &[(u32, u32)]) -> Vec<f64> {
    let mut out = vec![f64::NAN; years.len() * days.len()];
    let first = years[0];
    for v in &s.values {
        let Some(q) = v.discharge else { continue };
        let yi = v.date.year() - first;
        if yi < 0 || yi as usize >= years.len() {
            continue;
        }
        if let Some(k) = days.iter().position(|&md| md == (v.date.month(), v.date.day())) {
            out[yi as usize * days.len() + k] = q.sqrt();
        }
    }
    out
}

pub fn preprocess(series: &[StationSeries], cfg: &PreprocessConfig) -> Result<Preprocessed> {
    cfg.validate()?;
    let days = cfg.season_days()?;
    let years: Vec<i32> = (cfg.start_year..=cfg.end_year).collect();
    let nd = days.len();

    let mut report = Vec::new();
    let mut kept: Vec<(&StationSeries, Vec<f64>)> = Vec::new();
    for s in series {
        let z = seasonal_sqrt(s, &years, &days);
        let observed: Vec<f64> = z.iter().copied().filter(|v| v.is_finite()).collect();
        let coverage = observed.len() as f64 / z.len() as f64;
        let mut entry = StationReport {
            station: s.id.clone(),
            included: false,
            coverage,
            reason: None,
            scale: None,
        };
        if observed.is_empty() {
            entry.reason = Some("no observations in the season window".into());
        } else if coverage < cfg.min_coverage {
            entry.reason = Some(format!("coverage {coverage:.3} below {}", cfg.min_coverage));
        } else {
            match StationScale::from_values(&s.id, &observed) {
                Ok(sc) => {
                    entry.included = true;
                    entry.scale = Some(sc);
                    kept.push((
                        s,
                        z.iter()
                            .map(|&v| if v.is_finite() { sc.standardize(v) } else { v })
                            .collect(),
                    ));
                }
                Err(e) => entry.reason = Some(e.to_string()),
            }
        }
        if let Some(r) = &entry.reason {
            log::warn!("station {} excluded: {r}", s.id);
        }
        report.push(entry);
    }
    if kept.is_empty() {
        return Err(PipelineError::Preprocess(
            "no station passed the coverage and variability checks".into(),
        ));
    }

    let projection = Projection::bounding(&kept.iter().map(|(s, _)| (s.longitude, s.latitude)).collect::<Vec<_>>());
    let sites: Vec<[f64; 2]> = kept
        .iter()
        .map(|(s, _)| projection.apply(s.longitude, s.latitude))
        .collect();
    let times: Vec<f64> = (0..nd).map(|k| k as f64 / (nd - 1) as f64).collect();
    let layout = SpaceTimeLayout::new(sites, times, years.len())?;
    let mut values = vec![f64::NAN; layout.n_cells()];
    for (si, (_, y)) in kept.iter().enumerate() {
        for r in 0..years.len() {
            for t in 0..nd {
                values[layout.index(r, si, t)] = y[r * nd + t];
            }
        }
    }
    Ok(Preprocessed {
        dataset: Dataset::new(layout, values, Margin::Raw)?,
        site_ids: kept.iter().map(|(s, _)| s.id.clone()).collect(),
        years,
        projection,
        report,
    })
}
