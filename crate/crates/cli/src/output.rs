//! Writing `report.json`, `trace.csv` and `metadata.json`.
//!
//! Everything is rendered to bytes before the first file is written; if a
//! write fails, files already written are removed so that no partial
//! outputs remain.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::runner::{Outcome, Table};
use crate::scenario::{Overrides, Scenario};

pub const REPORT_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// Deterministic part of the output: identical inputs give identical bytes.
#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub report_version: u32,
    pub tool_version: &'static str,
    pub kind: &'static str,
    pub scenario_sha256: &'a str,
    pub seed: u64,
    pub overrides: &'a Overrides,
    pub scenario: &'a Scenario,
    pub passed: bool,
    pub checks: &'a BTreeMap<String, bool>,
    pub result: &'a Value,
    pub notes: &'a [String],
}

/// Run facts that differ between otherwise identical runs.
#[derive(Debug, Serialize)]
struct Metadata<'a> {
    unix_time: u64,
    scenario_path: &'a Path,
}

pub fn render_report(report: &Report<'_>) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(report).map_err(|e| CliError::Output(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn render_trace(table: &Table) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header).map_err(|e| CliError::Output(e.to_string()))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

pub struct RunInfo<'a> {
    pub scenario: &'a Scenario,
    pub scenario_path: &'a Path,
    pub sha256: &'a str,
    pub overrides: &'a Overrides,
}

pub fn write_outputs(out: &Path, info: &RunInfo<'_>, outcome: &Outcome) -> Result<()> {
    let report = Report {
        report_version: REPORT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        kind: info.scenario.kind().as_str(),
        scenario_sha256: info.sha256,
        seed: info.scenario.seed(),
        overrides: info.overrides,
        scenario: info.scenario,
        passed: outcome.passed,
        checks: &outcome.checks,
        result: &outcome.result,
        notes: &outcome.notes,
    };
    let unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let metadata = Metadata { unix_time, scenario_path: info.scenario_path };
    let mut meta = serde_json::to_vec_pretty(&metadata).map_err(|e| CliError::Output(e.to_string()))?;
    meta.push(b'\n');

    let files = [
        (REPORT_FILE, render_report(&report)?),
        (TRACE_FILE, render_trace(&outcome.trace)?),
        (METADATA_FILE, meta),
    ];
    write_all_or_nothing(out, &files)
}

fn write_all_or_nothing(out: &Path, files: &[(&str, Vec<u8>)]) -> Result<()> {
    let created_dir = !out.exists();
    if created_dir {
        std::fs::create_dir_all(out).map_err(|e| CliError::Io { path: out.to_path_buf(), source: e })?;
    }
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, bytes) in files {
        let path = out.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            let _ = std::fs::remove_file(&path);
            if created_dir {
                let _ = std::fs::remove_dir(out);
            }
            return Err(CliError::Io { path, source: e });
        }
        written.push(path);
    }
    Ok(())
}
