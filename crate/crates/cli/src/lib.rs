//! Batch front end for the `opmean` library: mean computation, verification
//! suites and Monte Carlo tail bounds driven by a JSON experiment config.
//!
//! Every report is written in a canonical form (sorted keys, 17 significant
//! digits), so identical configs give byte-identical files regardless of the
//! number of worker threads.

pub mod canonical;
pub mod commands;
pub mod config;
pub mod error;
pub mod suites;

pub use commands::{cmd_mean, cmd_tailbound, cmd_verify, Outcome};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VIOLATION};
pub use suites::{run_suite, Suite, SuiteReport};
