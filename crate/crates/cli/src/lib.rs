//! Command-line front end: run configurations, presets and output writers.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{RunConfig, Scenario};
pub use run::{execute, RunError, RunOutcome};
