//! Configuration, persistence and command drivers.

pub mod commands;
pub mod config;
pub mod plot;
pub mod series;
pub mod snapshot;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use snapshot::{snapshot_load, snapshot_save, Snapshot};
