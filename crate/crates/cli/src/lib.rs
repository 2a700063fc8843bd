//! Scenario-driven command-line front end for `credal-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod output;
pub mod runner;
pub mod scenario;

use std::path::Path;

pub use error::{CliError, Result};
pub use runner::Outcome;
pub use scenario::{Kind, Overrides, Scenario};

/// Result of a completed run; outputs have been written.
#[derive(Debug)]
pub struct Execution {
    pub outcome: Outcome,
    /// Override flags that do not apply to the scenario's kind.
    pub ignored_flags: Vec<&'static str>,
}

/// Loads, validates and runs a scenario, then writes its outputs to `out`.
/// With `expected` set, the scenario must be of that kind.
pub fn execute(expected: Option<Kind>, scenario_path: &Path, out: &Path, overrides: &Overrides) -> Result<Execution> {
    let loaded = scenario::load_scenario(scenario_path)?;
    let mut scenario = loaded.scenario;
    if let Some(kind) = expected {
        if kind != scenario.kind() {
            return Err(CliError::KindMismatch { expected: kind.as_str(), found: scenario.kind().as_str() });
        }
    }
    let ignored_flags = scenario.apply_overrides(overrides);
    scenario.validate()?;
    let outcome = runner::run_scenario(&scenario)?;
    let info = output::RunInfo { scenario: &scenario, scenario_path, sha256: &loaded.sha256, overrides };
    output::write_outputs(out, &info, &outcome)?;
    Ok(Execution { outcome, ignored_flags })
}
