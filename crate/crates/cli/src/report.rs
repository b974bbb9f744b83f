//! Serialization of experiment outputs and atomic file replacement.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Kind;
use crate::error::CliError;

/// Column names of `sweep.csv`.
pub const SWEEP_HEADER: [&str; 11] = [
    "eps",
    "hbar",
    "time",
    "kinetic_modulated",
    "field_energy",
    "relative_entropy",
    "total_modulated",
    "conserved_total",
    "h_minus1_density_error",
    "l1_entropy_error",
    "current_weak_error",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub hbar: f64,
    pub time: f64,
    pub kinetic_modulated: f64,
    pub field_energy: f64,
    pub relative_entropy: f64,
    pub total_modulated: f64,
    pub conserved_total: f64,
    pub h_minus1_density_error: f64,
    pub l1_entropy_error: f64,
    pub current_weak_error: f64,
}

impl SweepRow {
    pub fn values(&self) -> [f64; 11] {
        [
            self.eps,
            self.hbar,
            self.time,
            self.kinetic_modulated,
            self.field_energy,
            self.relative_entropy,
            self.total_modulated,
            self.conserved_total,
            self.h_minus1_density_error,
            self.l1_entropy_error,
            self.current_weak_error,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidatorResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl ValidatorResult {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub kind: Kind,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub points: Vec<serde_json::Value>,
    pub scalars: BTreeMap<String, f64>,
    pub validators: Vec<ValidatorResult>,
}

impl Summary {
    pub fn all_passed(&self) -> bool {
        self.validators.iter().all(|v| v.passed)
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

/// A CSV table of floats with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Columns printed as integers (counts).
    pub integer_columns: Vec<usize>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            integer_columns: Vec::new(),
        }
    }

    pub fn with_integer_columns(mut self, names: &[&str]) -> Self {
        self.integer_columns = names
            .iter()
            .filter_map(|n| self.header.iter().position(|h| h == n))
            .collect();
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().enumerate().map(|(j, v)| {
                if self.integer_columns.contains(&j) {
                    format!("{}", *v as i64)
                } else {
                    fmt_float(*v)
                }
            }))
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Everything an experiment writes, keyed by path relative to the output
/// directory. Files are written only after the whole experiment succeeded.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub files: BTreeMap<PathBuf, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, rel: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.insert(rel.into(), bytes);
    }

    pub fn add_table(&mut self, rel: impl Into<PathBuf>, table: &Table) {
        self.add(rel, table.to_csv());
    }

    pub fn add_summary(&mut self, summary: &Summary) {
        let mut bytes = serde_json::to_vec_pretty(summary).expect("summary serializes");
        bytes.push(b'\n');
        self.add("summary.json", bytes);
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), CliError> {
        for (rel, bytes) in &self.files {
            write_atomic(&dir.join(rel), bytes)?;
        }
        Ok(())
    }
}

/// Writes `bytes` to a sibling temp file, syncs it, and renames it over
/// `path`, so readers see either the old file or the complete new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}
