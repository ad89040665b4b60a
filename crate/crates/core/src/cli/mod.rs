//! Configuration, vector files and the experiment commands behind `bdlab`.

mod commands;
mod config;
pub mod io;

pub use commands::{run_command, Command, Outcome};
pub use config::{ExperimentConfig, ProbabilitySpec, Resolved, Tolerances, WeightSpec};
