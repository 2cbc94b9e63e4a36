//! CSV writers. Floats use Rust's shortest round-trip formatting.

use std::path::Path;

use super::regression::TraceRow;
use super::EngineResult;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 5] = ["round", "cum_loss", "wealth", "algorithm", "config_id"];
pub const SUMMARY_HEADER: [&str; 5] = [
    "config_id",
    "algorithm",
    "final_cum_loss",
    "final_wealth",
    "best_in_sweep",
];
pub const CTW_TRACE_HEADER: [&str; 5] = ["t", "omega", "log_wealth", "log_potential", "node_touches"];

/// One per-round diagnostic row of a CTW engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtwTraceRow {
    pub t: u64,
    pub omega: i8,
    pub log_wealth: f64,
    pub log_potential: f64,
    pub node_touches: u64,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace(path: &Path, rows: &[TraceRow], algorithm: &str, config_id: &str) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.round.to_string(),
            r.cum_loss.to_string(),
            opt(r.wealth),
            algorithm.to_string(),
            config_id.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, results: &[EngineResult]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for r in results {
        let last = r.rows.last();
        w.write_record([
            r.config_id.clone(),
            r.algorithm.to_string(),
            last.map(|l| l.cum_loss.to_string()).unwrap_or_default(),
            opt(last.and_then(|l| l.wealth)),
            r.best_in_sweep.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ctw_trace(path: &Path, rows: &[CtwTraceRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(CTW_TRACE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.omega.to_string(),
            r.log_wealth.to_string(),
            r.log_potential.to_string(),
            r.node_touches.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
