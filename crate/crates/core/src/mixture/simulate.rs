use super::dataset::Dataset;
use super::params::MixtureParams;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng;
use crate::simulators::{frechet_to_exp, BrMethod, BrownResnick, Margin, SpaceTimeLayout, VariogramMode};

/// Component order, matching the weight order.
pub const COMPONENTS: [&str; 4] = ["spatiotemporal", "spatial", "temporal", "inverted"];

/// Simulator for `X = λ₁R_ST + λ₂R_S + λ₃R_T + λ₄W` on a fixed layout.
///
/// Each component has standard exponential margins. Component `c` draws
/// from the seed `derive_seed(seed, [c])`, and replicate `r` of that
/// component from the stream `(component seed, [r])`, so the output does
/// not depend on how replicates are scheduled.
#[derive(Debug, Clone)]
pub struct MixtureSimulator {
    params: MixtureParams,
    space_time: BrownResnick,
    spatial: BrownResnick,
    temporal: BrownResnick,
}

impl MixtureSimulator {
    pub fn new(params: &MixtureParams, layout: &SpaceTimeLayout) -> Result<Self> {
        let v = params.variogram();
        let build = |mode| BrownResnick::new(&v.with_mode(mode), layout, BrMethod::Exact);
        Ok(Self {
            params: *params,
            space_time: build(VariogramMode::SpaceTime)?,
            spatial: build(VariogramMode::SpatialOnly)?,
            temporal: build(VariogramMode::TemporalOnly)?,
        })
    }

    pub fn params(&self) -> &MixtureParams {
        &self.params
    }

    pub fn layout(&self) -> &SpaceTimeLayout {
        self.space_time.layout()
    }

    pub fn component_seeds(seed: u64) -> [u64; 4] {
        [0u64, 1, 2, 3].map(|c| rng::derive_seed(seed, &[c]))
    }

    pub fn simulate(&self, seed: u64, exec: Exec) -> Result<Dataset> {
        self.simulate_with_component_seeds(Self::component_seeds(seed), exec)
    }

    pub fn simulate_with_component_seeds(&self, seeds: [u64; 4], exec: Exec) -> Result<Dataset> {
        let w = self.params.weights();
        let reps = exec.try_map(self.layout().replicates, |r| {
            let comps = self.replicate_components(r, seeds)?;
            let n = comps[0].len();
            Ok::<_, Error>(
                (0..n)
                    .map(|i| w[0] * comps[0][i] + w[1] * comps[1][i] + w[2] * comps[2][i] + w[3] * comps[3][i])
                    .collect::<Vec<f64>>(),
            )
        })?;
        Dataset::new(self.layout().clone(), reps.concat(), Margin::Hypoexponential(w))
    }

    /// The four standard-exponential component fields of replicate `r`.
    pub fn replicate_components(&self, r: usize, seeds: [u64; 4]) -> Result<[Vec<f64>; 4]> {
        let np = self.layout().n_points();
        let draw = |sim: &BrownResnick, seed: u64| -> Result<Vec<f64>> {
            let mut out = vec![0.0; np];
            sim.sample_replicate(&mut rng::stream(seed, &[r as u64]), &mut out)?;
            Ok(out)
        };
        let mut st = draw(&self.space_time, seeds[0])?;
        let mut sp = draw(&self.spatial, seeds[1])?;
        let mut tm = draw(&self.temporal, seeds[2])?;
        let mut inv = draw(&self.space_time, seeds[3])?;
        for v in st.iter_mut().chain(sp.iter_mut()).chain(tm.iter_mut()) {
            *v = frechet_to_exp(*v);
        }
        // inverted process: large values where Z is small, P(1/Z > x) = e^{-x}
        for v in inv.iter_mut() {
            *v = 1.0 / *v;
        }
        Ok([st, sp, tm, inv])
    }
}

/// One dataset from the mixture with standard hypoexponential margins.
pub fn simulate_mixture(p: &MixtureParams, layout: &SpaceTimeLayout, seed: u64) -> Result<Dataset> {
    MixtureSimulator::new(p, layout)?.simulate(seed, Exec::default())
}
