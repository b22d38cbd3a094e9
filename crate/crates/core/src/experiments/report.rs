//! Experiment reports and their on-disk form.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::csvfmt;
use crate::error::{Error, Result};

/// A numeric table written as CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
    /// Row count implied by the sweep.
    pub expected_rows: usize,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str], expected_rows: usize) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            expected_rows,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&csvfmt::row(r));
            out.push('\n');
        }
        out
    }
}

/// Outcome of one built-in check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// A binary file produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n_particles: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub kind: String,
    pub seed: u64,
    pub version: String,
    pub sweep: Vec<SweepPoint>,
}

/// Wall-clock information, kept apart from the deterministic report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInfo {
    pub config_hash: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub metadata: Metadata,
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<Artifact>,
    pub run_info: RunInfo,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Every table has the row count its sweep declares.
    pub fn verify_tables(&self) -> Result<()> {
        for t in &self.tables {
            if t.rows.len() != t.expected_rows {
                return Err(Error::InvalidArgument(format!(
                    "table {} has {} rows, sweep declares {}",
                    t.name,
                    t.rows.len(),
                    t.expected_rows
                )));
            }
        }
        Ok(())
    }

    /// `report.json` content, deterministic for a given run.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct TableEntry<'a> {
            file: String,
            header: &'a [String],
            rows: usize,
        }
        #[derive(Serialize)]
        struct View<'a> {
            metadata: &'a Metadata,
            tables: BTreeMap<&'a str, TableEntry<'a>>,
            checkpoints: Vec<&'a str>,
            checks: &'a [Check],
            warnings: &'a [String],
            summary: &'a serde_json::Value,
        }
        let view = View {
            metadata: &self.metadata,
            tables: self
                .tables
                .iter()
                .map(|t| {
                    (
                        t.name.as_str(),
                        TableEntry {
                            file: t.file_name(),
                            header: &t.header,
                            rows: t.rows.len(),
                        },
                    )
                })
                .collect(),
            checkpoints: self.artifacts.iter().map(|a| a.name.as_str()).collect(),
            checks: &self.checks,
            warnings: &self.warnings,
            summary: &self.summary,
        };
        let mut s = serde_json::to_string_pretty(&view).expect("report serializes");
        s.push('\n');
        s
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Write `report.json`, `run_info.json`, one CSV per table and the binary
/// checkpoints into `out_dir`. Emitting the same report twice gives the same
/// bytes.
pub fn emit_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>> {
    report.verify_tables()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = vec![write(&out_dir.join("report.json"), report.to_json().as_bytes())?];
    let mut info = serde_json::to_string_pretty(&report.run_info).expect("run info serializes");
    info.push('\n');
    written.push(write(&out_dir.join("run_info.json"), info.as_bytes())?);
    for t in &report.tables {
        written.push(write(&out_dir.join(t.file_name()), t.to_csv().as_bytes())?);
    }
    for a in &report.artifacts {
        written.push(write(&out_dir.join(&a.name), &a.bytes)?);
    }
    Ok(written)
}
