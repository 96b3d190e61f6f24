use rand::Rng;
use rand_distr::Exp1;

use super::gaussian::GaussianField;
use super::layout::SpaceTimeLayout;
use super::sample::{Margin, ProcessSample};
use super::variogram::{VariogramMode, VariogramSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::{self, SimRng};

/// Proposal budget per independent block before the exact sampler gives up.
pub const MAX_PROPOSALS: usize = 1_000_000;

const MAX_BLOCK_POINTS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrMethod {
    /// Exact simulation by extremal functions.
    Exact,
    /// Poisson-sum truncated after `terms` spectral functions. Biased; kept
    /// only as a validation reference.
    Truncated { terms: usize },
}

/// Brown-Resnick process on a layout, with unit-Fréchet margins.
///
/// Spectral functions are log-Gaussian, `W(x) = exp{ε(x) − γ(x, o)/2}`. For
/// the extremal function rooted at point `k` the field is re-pinned by
/// differencing, `ε(x) − ε(x_k)`, which has the same increments, so a single
/// Cholesky factor serves every root.
#[derive(Debug, Clone)]
pub struct BrownResnick {
    layout: SpaceTimeLayout,
    mode: VariogramMode,
    method: BrMethod,
    field: GaussianField,
    /// γ/2 between block points, row-major.
    half_gamma: Vec<f64>,
    block_len: usize,
}

impl BrownResnick {
    pub fn new(v: &VariogramSpec, layout: &SpaceTimeLayout, method: BrMethod) -> Result<Self> {
        let points: Vec<[f64; 3]> = match v.mode {
            VariogramMode::SpaceTime => (0..layout.n_points()).map(|p| layout.point(p)).collect(),
            VariogramMode::SpatialOnly => layout.sites.iter().map(|s| [s[0], s[1], 0.0]).collect(),
            VariogramMode::TemporalOnly => layout.times.iter().map(|&t| [0.0, 0.0, t]).collect(),
        };
        let n = points.len();
        if n > MAX_BLOCK_POINTS {
            return Err(Error::Parameter(format!(
                "{n} points in one dependent block; the exact simulator supports at most {MAX_BLOCK_POINTS}"
            )));
        }
        if let BrMethod::Truncated { terms } = method {
            if terms == 0 {
                return Err(Error::Parameter("truncated simulator needs at least one term".into()));
            }
        }
        let field = GaussianField::new(v, &points, 0)?;
        let mut half_gamma = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                half_gamma[i * n + j] = 0.5 * v.gamma_points(points[i], points[j]);
            }
        }
        Ok(Self {
            layout: layout.clone(),
            mode: v.mode,
            method,
            field,
            half_gamma,
            block_len: n,
        })
    }

    pub fn layout(&self) -> &SpaceTimeLayout {
        &self.layout
    }

    /// All replicates; replicate `r` uses stream `(seed, r)`.
    pub fn sample(&self, seed: u64, exec: Exec) -> Result<ProcessSample> {
        let np = self.layout.n_points();
        let reps = exec.try_map(self.layout.replicates, |r| {
            let mut rng = rng::stream(seed, &[r as u64]);
            let mut out = vec![0.0; np];
            self.sample_replicate(&mut rng, &mut out)?;
            Ok::<_, Error>(out)
        })?;
        Ok(ProcessSample {
            layout: self.layout.clone(),
            values: reps.concat(),
            margin: Margin::UnitFrechet,
        })
    }

    /// One replicate (all sites and times) into `out`, laid out `s·T + t`.
    pub fn sample_replicate(&self, rng: &mut SimRng, out: &mut [f64]) -> Result<()> {
        let (m, nt) = (self.layout.n_sites(), self.layout.n_times());
        let mut scratch = Scratch::new(self.block_len);
        match self.mode {
            VariogramMode::SpaceTime => {
                self.sample_block(rng, &mut scratch)?;
                out.copy_from_slice(&scratch.z);
            }
            VariogramMode::SpatialOnly => {
                for t in 0..nt {
                    self.sample_block(rng, &mut scratch)?;
                    for s in 0..m {
                        out[s * nt + t] = scratch.z[s];
                    }
                }
            }
            VariogramMode::TemporalOnly => {
                for s in 0..m {
                    self.sample_block(rng, &mut scratch)?;
                    out[s * nt..(s + 1) * nt].copy_from_slice(&scratch.z);
                }
            }
        }
        Ok(())
    }

    fn sample_block(&self, rng: &mut SimRng, sc: &mut Scratch) -> Result<()> {
        match self.method {
            BrMethod::Exact => self.extremal_functions(rng, sc),
            BrMethod::Truncated { terms } => {
                self.truncated(rng, sc, terms);
                Ok(())
            }
        }
    }

    fn extremal_functions(&self, rng: &mut SimRng, sc: &mut Scratch) -> Result<()> {
        let n = self.block_len;
        sc.z.fill(0.0);
        let mut proposals = 0usize;
        for k in 0..n {
            let hg = &self.half_gamma[k * n..(k + 1) * n];
            let mut arrival: f64 = rng.sample(Exp1);
            let mut zeta = 1.0 / arrival;
            while zeta > sc.z[k] {
                proposals += 1;
                if proposals > MAX_PROPOSALS {
                    return Err(Error::Simulation(format!(
                        "extremal-function sampler exceeded {MAX_PROPOSALS} proposals \
                         ({n} points, stuck at root {k}, current max {:e})",
                        sc.z[k]
                    )));
                }
                self.field.sample_into(rng, &mut sc.gauss, &mut sc.eps);
                let ek = sc.eps[k];
                let mut accept = true;
                for j in 0..k {
                    let y = zeta * (sc.eps[j] - ek - hg[j]).exp();
                    if y >= sc.z[j] {
                        accept = false;
                        break;
                    }
                }
                if accept {
                    for x in k..n {
                        let y = zeta * (sc.eps[x] - ek - hg[x]).exp();
                        if y > sc.z[x] {
                            sc.z[x] = y;
                        }
                    }
                }
                arrival += rng.sample::<f64, _>(Exp1);
                zeta = 1.0 / arrival;
            }
        }
        Ok(())
    }

    fn truncated(&self, rng: &mut SimRng, sc: &mut Scratch, terms: usize) {
        let n = self.block_len;
        let hg = &self.half_gamma[..n];
        sc.z.fill(0.0);
        let mut arrival = 0.0;
        for _ in 0..terms {
            arrival += rng.sample::<f64, _>(Exp1);
            self.field.sample_into(rng, &mut sc.gauss, &mut sc.eps);
            for x in 0..n {
                let y = (sc.eps[x] - hg[x]).exp() / arrival;
                if y > sc.z[x] {
                    sc.z[x] = y;
                }
            }
        }
    }
}

struct Scratch {
    z: Vec<f64>,
    eps: Vec<f64>,
    gauss: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            z: vec![0.0; n],
            eps: vec![0.0; n],
            gauss: vec![0.0; n],
        }
    }
}

/// Exact Brown-Resnick draws with unit-Fréchet margins.
pub fn sample_brown_resnick(v: &VariogramSpec, layout: &SpaceTimeLayout, seed: u64) -> Result<ProcessSample> {
    BrownResnick::new(v, layout, BrMethod::Exact)?.sample(seed, Exec::default())
}

/// Inverted Brown-Resnick process `1/G{Z}` with standard Pareto margins,
/// where `Z` is Brown-Resnick with the space-time variogram and `G` the
/// unit-Fréchet CDF.
pub fn sample_inverted_br(v: &VariogramSpec, layout: &SpaceTimeLayout, seed: u64) -> Result<ProcessSample> {
    let v = v.with_mode(VariogramMode::SpaceTime);
    let z = sample_brown_resnick(&v, layout, seed)?;
    Ok(invert(z))
}

pub(crate) fn invert(z: ProcessSample) -> ProcessSample {
    ProcessSample {
        values: z.values.iter().map(|&z| (1.0 / z).exp()).collect(),
        layout: z.layout,
        margin: Margin::StandardPareto,
    }
}
