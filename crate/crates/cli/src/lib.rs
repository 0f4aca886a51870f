//! Scenario loading, built-in networks, trace files and reports for the
//! `debt-pcn` command-line tool.

pub mod builtin;
pub mod error;
pub mod output;
pub mod report;
pub mod scenario;

pub use error::{CliError, Result};
pub use scenario::{load_scenario, parse_scenario, resolve, Overrides, Scenario, ScenarioFile};
