//! Exact-margin random process generators.
//!
//! Gaussian fields with a prescribed variogram, Brown-Resnick max-stable
//! processes (spatial, temporal or spatiotemporal), inverted Brown-Resnick
//! processes and the transforms to standard exponential margins.

mod brown_resnick;
mod gaussian;
mod layout;
mod sample;
mod variogram;

pub use brown_resnick::{sample_brown_resnick, sample_inverted_br, BrMethod, BrownResnick, MAX_PROPOSALS};
pub use gaussian::{sample_gaussian_field, GaussianField};
pub use layout::SpaceTimeLayout;
pub(crate) use sample::frechet_to_exp;
pub use sample::{to_standard_exponential, Margin, ProcessSample};
pub use variogram::{VariogramMode, VariogramSpec};
