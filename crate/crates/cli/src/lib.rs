//! Configuration, orchestration and output for the `fpp` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, Experiment, RunManifest};
pub use run::{run, RunError, RunSummary};
