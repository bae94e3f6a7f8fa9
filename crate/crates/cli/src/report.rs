//! Report plumbing: config echo, derived checks, atomic JSON/CSV emission.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// One quantitative claim the experiment re-verified while running.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedCheck {
    pub claim: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl DerivedCheck {
    pub fn new(claim: &str, expected: f64, observed: f64, tolerance: f64) -> Self {
        DerivedCheck {
            claim: claim.to_string(),
            expected,
            observed,
            tolerance,
            pass: (observed - expected).abs() <= tolerance,
        }
    }
}

/// Tabular block some experiments produce; this is all CSV mode emits.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// What a runner hands back before it is wrapped into a report.
#[derive(Debug)]
pub struct ExperimentOutcome {
    /// Fully resolved parameters, defaults filled in.
    pub parameters: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    pub checks: Vec<DerivedCheck>,
    pub table: Option<Table>,
}

#[derive(Debug, Serialize)]
pub struct OutputSpec {
    pub path: String,
    pub format: String,
}

#[derive(Debug, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub parameters: BTreeMap<String, Value>,
    pub output: OutputSpec,
}

/// Self-describing record of one run: re-running the echoed config must
/// reproduce `results` exactly; only `runtime_ms` may differ.
#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub results: BTreeMap<String, Value>,
    pub derived_checks: Vec<DerivedCheck>,
    pub runtime_ms: u64,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.derived_checks.iter().all(|c| c.pass)
    }
}

pub fn to_json_bytes(report: &ExperimentReport) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub fn to_csv_bytes(table: &Table) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header).expect("csv header");
    for row in &table.rows {
        w.write_record(row).expect("csv row");
    }
    w.into_inner().expect("csv buffer")
}

/// Write via a temp file in the target directory, then rename, so readers
/// never observe a half-written report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = tmp_sibling(path);
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    Ok(())
}

fn tmp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string());
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}
