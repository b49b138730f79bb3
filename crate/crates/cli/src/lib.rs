//! Configuration, orchestration and result files for reach-avoid game
//! experiments. The `reachavoid` binary is a thin wrapper over this crate.

pub mod config;
pub mod error;
pub mod run;

pub use config::{load_config, load_config_with, ExperimentConfig, Overrides};
pub use error::{CliError, Result};
pub use run::{run_eval, run_oracle, run_solve, run_sweep, RunReport};
