//! File formats, the training runner, experiment recipes and the `zsda`
//! command line built on `zsda-core`.

pub mod analysis;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod format;
pub mod recipe;
pub mod report;
pub mod runner;

pub use error::{Error, Result};
