//! Scenario runner for the `axisym` simulator: configuration, validation,
//! execution and machine-readable reports.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod report;
pub mod scenarios;
pub mod validate;

use std::path::Path;

use anyhow::Result;

pub use config::{Scenario, ScenarioConfig, REFERENCE_CONFIG};
pub use scenarios::{run_scenario, Invalid, RunOutput};
pub use validate::{validate_config, Violation};

/// Runs the scenario and writes the CSV and summary named in the config.
pub fn run_and_write(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let out = run_scenario(cfg)?;
    report::write_file(&cfg.output.csv, &out.table.to_bytes()?)?;
    report::write_file(&cfg.output.summary, &out.summary.to_bytes()?)?;
    Ok(out)
}

/// Loads, runs and writes.
pub fn run_path(path: &Path) -> Result<RunOutput> {
    run_and_write(&ScenarioConfig::load(path)?)
}
