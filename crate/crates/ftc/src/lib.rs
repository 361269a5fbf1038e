//! File formats, presets, batch execution and the command line front end
//! for the `ftc-core` simulator.

pub mod config;
pub mod output;
pub mod overrides;
pub mod presets;
pub mod runner;

pub use config::{load, LoadError, LoadedScenario, ScenarioConfig, Source};
pub use overrides::Override;
pub use runner::{batch, run, Outcome, Status};
