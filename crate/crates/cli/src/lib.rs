//! Scenario files, the built-in gallery and report generation for the
//! `jumpcompare` command-line tool.

pub mod config;
pub mod error;
pub mod gallery;
pub mod report;
pub mod run;

pub use config::{parse_config, ScenarioConfig};
pub use error::CliError;
pub use report::RunReport;
