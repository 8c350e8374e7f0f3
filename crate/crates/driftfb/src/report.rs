//! Run reports: CSV tables, the JSON manifest, and pass/fail verdicts.
//!
//! CSV bodies are deterministic functions of the numbers (RFC-4180 quoting,
//! '.' decimal, 17 significant digits); wall-clock data lives only in the
//! manifest, so identical configs produce byte-identical tables.

use crate::error::Result;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

/// One named check with its outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// In-memory result of a scenario run.
#[derive(Debug, Default, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub verdicts: Vec<Verdict>,
    /// Named diagnostics merged into the manifest (residuals, iteration
    /// counts, fitted values ...).
    pub diagnostics: Map<String, Value>,
    /// `(label, seconds)` timings.
    pub timings: Vec<(String, f64)>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
    /// True when the solver converged on every member run.
    pub solver_converged: bool,
}

impl RunReport {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            solver_converged: true,
            ..Default::default()
        }
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn push(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn note(&mut self, key: &str, value: Value) {
        self.diagnostics.insert(key.to_string(), value);
    }
}

/// 17 significant digits: enough to round-trip an f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{:.16e}", x)
    }
}

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Writes an RFC-4180 CSV file; rows are emitted in the given order.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = String::new();
    out.push_str(
        &header
            .iter()
            .map(|h| csv_quote(h))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for row in rows {
        out.push_str(
            &row.iter()
                .map(|f| csv_quote(f))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes the JSON run manifest: config echo, crate version, timestamp,
/// timings, diagnostics, and verdicts.
pub fn write_manifest(
    dir: &Path,
    report: &RunReport,
    config_echo: &std::collections::BTreeMap<String, String>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let unix = SystemTime::now()
        .duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = json!({
        "scenario": report.scenario,
        "version": env!("CARGO_PKG_VERSION"),
        "unix_time": unix,
        "config": config_echo,
        "timings_seconds": report.timings.iter().map(|(k, v)| json!({"step": k, "seconds": v})).collect::<Vec<_>>(),
        "diagnostics": Value::Object(report.diagnostics.clone()),
        "verdicts": report.verdicts,
        "artifacts": report.artifacts,
        "all_passed": report.all_passed(),
        "solver_converged": report.solver_converged,
    });
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap())?;
    Ok(path)
}
