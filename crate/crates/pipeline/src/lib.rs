//! Streamflow pipeline and command line for the exceedance mixture model:
//! NWIS ingestion, seasonal standardization, threshold-GPD margins with a
//! probability integral transform, dataset files and the `run-study`
//! workflow.

pub mod cli;
pub mod error;
pub mod io;
pub mod margins;
pub mod preprocess;
pub mod study;
pub mod usgs;

pub use error::{PipelineError, Result};
