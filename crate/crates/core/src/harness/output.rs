use std::fs;
use std::path::Path;

use serde::Serialize;

use super::aggregate::aggregate;
use super::run::SweepOutcome;

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FAILURES_FILE: &str = "failures.csv";

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_file_name(axis: &str, value: &str) -> String {
    format!("trace_{axis}_{value}.csv")
}

/// Writes `trials.csv`, `summary.csv`, any trace files and, when trials
/// failed, `failures.csv` into `dir`.
pub fn write_outputs(dir: &Path, axis: &str, outcome: &SweepOutcome) -> Result<(), csv::Error> {
    fs::create_dir_all(dir)?;
    if outcome.records.is_empty() {
        // keep the header so downstream readers see the schema
        fs::write(
            dir.join(TRIALS_FILE),
            "axis,value,algorithm,trial,pe,nmse,nmse_active,iters,wall_ms\n",
        )?;
    } else {
        write_csv(&dir.join(TRIALS_FILE), &outcome.records)?;
    }
    write_csv(&dir.join(SUMMARY_FILE), &aggregate(&outcome.records))?;
    for (value, rows) in &outcome.traces {
        write_csv(&dir.join(trace_file_name(axis, value)), rows)?;
    }
    if !outcome.failures.is_empty() {
        write_csv(&dir.join(FAILURES_FILE), &outcome.failures)?;
    }
    Ok(())
}
