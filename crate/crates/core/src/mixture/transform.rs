use super::dataset::Dataset;
use crate::distributions::{HypoexpParams, MarginalModel};
use crate::error::{Error, Result};
use crate::simulators::Margin;

/// Target margins for [`transform_margins`].
#[derive(Debug, Clone, PartialEq)]
pub enum MarginTarget {
    Uniform,
    Model(MarginalModel),
}

/// Survival probabilities are floored here so the tail map stays finite.
const MIN_SURVIVAL: f64 = 1e-300;

/// Cell-wise `y = F⁻¹{H_λ(x); s}`, or `u = H_λ(x)` for a uniform target.
///
/// Accepts hypoexponential input for either target, and uniform input for
/// a model target. Every map is strictly increasing per cell, so ranks and
/// exceedance patterns are preserved. Missing cells stay missing.
pub fn transform_margins(d: &Dataset, target: &MarginTarget) -> Result<Dataset> {
    if let MarginTarget::Model(m) = target {
        if m.sites() != d.layout.n_sites() {
            return Err(Error::Data(format!(
                "marginal model has {} sites, dataset has {}",
                m.sites(),
                d.layout.n_sites()
            )));
        }
    }
    let nt = d.layout.n_times();
    let np = d.layout.n_points();
    let site_of = |i: usize| (i % np) / nt;
    let mut values = Vec::with_capacity(d.values.len());
    match (&d.margin, target) {
        (Margin::Hypoexponential(w), MarginTarget::Uniform) => {
            let h = HypoexpParams::new(*w)?;
            values.extend(d.values.iter().map(|&x| if x.is_nan() { x } else { h.cdf(x) }));
        }
        (Margin::Hypoexponential(w), MarginTarget::Model(m)) => {
            let h = HypoexpParams::new(*w)?;
            for (i, &x) in d.values.iter().enumerate() {
                values.push(if x.is_nan() {
                    x
                } else {
                    m.value_at_survival(site_of(i), h.sf(x).max(MIN_SURVIVAL))?
                });
            }
        }
        (Margin::Uniform, MarginTarget::Model(m)) => {
            for (i, &u) in d.values.iter().enumerate() {
                values.push(if u.is_nan() {
                    u
                } else {
                    m.value_at_survival(site_of(i), (1.0 - u).max(MIN_SURVIVAL))?
                });
            }
        }
        (other, _) => {
            let expected = match target {
                MarginTarget::Uniform => "hypoexponential",
                MarginTarget::Model(_) => "hypoexponential or uniform",
            };
            return Err(Error::Margin {
                expected: expected.into(),
                found: other.name().into(),
            });
        }
    }
    let margin = match target {
        MarginTarget::Uniform => Margin::Uniform,
        MarginTarget::Model(_) => Margin::Gpd,
    };
    Dataset::new(d.layout.clone(), values, margin)
}
