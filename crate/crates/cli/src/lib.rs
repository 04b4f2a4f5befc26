//! Batch front end for `fsl-core`: run configuration, verification suites,
//! baseline bookkeeping, reports and plot data.

pub mod baseline;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod report;
pub mod suites;

pub use baseline::{BaselineStore, BASELINE_ENV};
pub use config::{ResolvedConfig, RunConfig};
pub use error::{CliError, Result};
pub use plot::emit_plot_data;
pub use report::{CheckResult, Report};
pub use suites::{run_suite, RunOptions, RunOutcome};
