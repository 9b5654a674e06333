//! Configuration-driven experiments on top of `tat-core`.

pub mod config;
pub mod experiment;
pub mod pgm;
pub mod selftest;

pub use config::{ExperimentConfig, GeometryConfig};
pub use experiment::{run_experiment, ExperimentSummary};
pub use pgm::render_pgm;
