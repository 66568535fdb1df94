//! Simulation harness: worker pool, metrics, matrix files and experiments.

pub mod cluster;
pub mod experiment;
pub mod io;
pub mod metrics;
