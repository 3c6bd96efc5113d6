//! Run results and their CSV / JSON serializations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dcvqe_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::Task;

pub const CSV_HEADER: [&str; 7] = [
    "method",
    "parameter",
    "E_total_hartree",
    "E_ref_hartree",
    "deviation_mhartree",
    "max_qubits",
    "wall_ms",
];

pub const REPORT_FILE: &str = "report.json";

/// One method evaluated at one geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub method: String,
    /// Scan coordinate in Å; absent for single-geometry tasks.
    pub parameter: Option<f64>,
    pub e_total: Option<f64>,
    pub e_ref: Option<f64>,
    /// `e_total − e_ref` in hartree.
    pub deviation: Option<f64>,
    pub n_subproblems: usize,
    pub max_qubits: usize,
    pub wall_ms: u64,
    /// Set when the method failed outright or only partly succeeded.
    pub error: Option<String>,
}

impl Record {
    pub fn new(method: impl Into<String>, parameter: Option<f64>) -> Self {
        Record {
            method: method.into(),
            parameter,
            e_total: None,
            e_ref: None,
            deviation: None,
            n_subproblems: 0,
            max_qubits: 0,
            wall_ms: 0,
            error: None,
        }
    }

    pub fn failed(method: impl Into<String>, parameter: Option<f64>, error: &Error) -> Self {
        Record {
            error: Some(error.to_string()),
            ..Record::new(method, parameter)
        }
    }

    /// Attach the reference energy and refresh the deviation.
    pub fn set_reference(&mut self, e_ref: Option<f64>) {
        self.e_ref = e_ref;
        self.deviation = match (self.e_total, self.e_ref) {
            (Some(e), Some(r)) => Some(e - r),
            _ => None,
        };
    }

    pub fn deviation_mhartree(&self) -> Option<f64> {
        self.deviation.map(|d| d * 1e3)
    }

    pub fn is_failure(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Program name and version.
    pub version: String,
    /// Compiler that built the program.
    pub toolchain: String,
    pub task: Task,
    pub records: Vec<Record>,
}

impl RunReport {
    pub fn new(task: Task, records: Vec<Record>) -> Self {
        RunReport {
            version: concat!("dcvqe ", env!("CARGO_PKG_VERSION")).to_string(),
            toolchain: env!("DCVQE_RUSTC_VERSION").to_string(),
            task,
            records,
        }
    }

    /// True when any record carries an error.
    pub fn is_partial(&self) -> bool {
        self.records.iter().any(Record::is_failure)
    }

    /// Records grouped by method, each group in parameter order.
    pub fn by_method(&self) -> BTreeMap<&str, Vec<&Record>> {
        let mut out: BTreeMap<&str, Vec<&Record>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.method.as_str()).or_default().push(r);
        }
        for group in out.values_mut() {
            group.sort_by(|a, b| {
                a.parameter
                    .partial_cmp(&b.parameter)
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("report", e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Structured,
}

fn fixed(x: Option<f64>, decimals: usize) -> String {
    x.map(|v| format!("{v:.decimals$}")).unwrap_or_default()
}

/// CSV text for a set of records: header plus one row each.
pub fn csv_string<'a>(records: impl IntoIterator<Item = &'a Record>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.method.clone(),
            r.parameter.map(|p| p.to_string()).unwrap_or_default(),
            fixed(r.e_total, 12),
            fixed(r.e_ref, 12),
            fixed(r.deviation_mhartree(), 9),
            r.max_qubits.to_string(),
            r.wall_ms.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Write the report into `dir`: one `<method>.csv` per method, or `report.json`.
pub fn emit_report(report: &RunReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    if report.records.is_empty() {
        return Err(Error::config("report", "nothing to write"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files: Vec<(PathBuf, String)> = match format {
        Format::Csv => report
            .by_method()
            .into_iter()
            .map(|(method, rows)| (dir.join(format!("{method}.csv")), csv_string(rows)))
            .collect(),
        Format::Structured => vec![(dir.join(REPORT_FILE), report.to_json())],
    };
    let mut written = Vec::new();
    for (path, text) in files {
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
