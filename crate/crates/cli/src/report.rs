//! Run reports: everything needed to reproduce and audit one solver run,
//! serialized as JSON (serde_json prints f64 losslessly, so reports re-parse
//! to identical values).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use fuzzyseg::solver::RunReport;

use crate::{CliError, CliResult};

/// The on-disk report: the solver's own summary plus the file-level context
/// of the invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub input: String,
    pub truth: Option<String>,
    pub used_sidecar: bool,
    pub run: RunReport,
}

pub fn write_report(path: &Path, report: &ReportFile) -> CliResult<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| CliError::io(e.to_string()))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_report(path: &Path) -> CliResult<ReportFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {}", path.display(), e)))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(format!("malformed report: {}", e)))
}
