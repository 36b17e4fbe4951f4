//! Agent-based chain simulation.

pub mod agents;
pub mod config;
pub mod flow;
pub mod mempool;
pub mod report;
pub mod salvage;
pub mod scenarios;
mod runner;
pub mod snapshot;
pub mod wallet;

pub use config::ScenarioConfig;
pub use report::Report;
pub use runner::{run, Sim, SimError};
pub use snapshot::Snapshot;
