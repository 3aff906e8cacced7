//! Per-solve reports and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SolveStatus;

/// What one solve did and how long it took.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub instance: String,
    pub method: String,
    pub formulation: String,
    /// Percentage of reactions bounding the cuts per iteration (Benders only).
    pub pct: Option<f64>,
    pub strategy: String,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// Master solves for Benders, 1 for monolithic solves.
    pub iterations: usize,
    pub cuts: usize,
    pub wall_time_s: f64,
    pub master_time_s: f64,
    pub mis_time_s: f64,
    /// Master objective per iteration.
    pub master_objectives: Vec<f64>,
}

impl SolveReport {
    pub fn new(method: impl Into<String>, status: SolveStatus) -> Self {
        SolveReport {
            instance: String::new(),
            method: method.into(),
            formulation: String::new(),
            pct: None,
            strategy: String::new(),
            status,
            objective: None,
            iterations: 0,
            cuts: 0,
            wall_time_s: 0.0,
            master_time_s: 0.0,
            mis_time_s: 0.0,
            master_objectives: Vec::new(),
        }
    }

    pub fn to_row(&self) -> ReportRow {
        ReportRow {
            instance: self.instance.clone(),
            method: self.method.clone(),
            formulation: self.formulation.clone(),
            pct: self.pct,
            strategy: self.strategy.clone(),
            status: self.status,
            objective: self.objective,
            iterations: self.iterations,
            cuts: self.cuts,
            wall_time_s: self.wall_time_s,
        }
    }
}

/// One CSV line of a benchmark report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: String,
    pub method: String,
    pub formulation: String,
    pub pct: Option<f64>,
    pub strategy: String,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub cuts: usize,
    pub wall_time_s: f64,
}

pub const CSV_HEADER: [&str; 10] = [
    "instance",
    "method",
    "formulation",
    "pct",
    "strategy",
    "status",
    "objective",
    "iterations",
    "cuts",
    "wall_time_s",
];

/// Writes the header followed by `rows`; the header is written even when
/// `rows` is empty.
pub fn write_rows<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))
}

pub fn read_rows<R: Read>(input: R, origin: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(|e| Error::parse(origin, e)))
        .collect()
}
