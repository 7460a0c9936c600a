//! Scenario configuration, seeded Monte-Carlo sweeps, aggregation and CSV
//! output.

mod aggregate;
mod config;
mod output;
mod run;
mod sweep;

pub use aggregate::{aggregate, Stats, SummaryRow};
pub use config::{Algorithm, ConfigError, ScenarioConfig, Schedule};
pub use output::{trace_file_name, write_csv, write_outputs, FAILURES_FILE, SUMMARY_FILE, TRIALS_FILE};
pub use run::{estimate, run_sweep, Estimate, Scenario, SweepOutcome, TraceRecord, TrialFailure, TrialInstance, TrialRecord};
pub use sweep::{SweepAxis, SweepSpec};
