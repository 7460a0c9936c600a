//! `jadce`: run seeded Monte-Carlo sweeps and write CSV results.
//!
//! Exit status is 0 on success, 1 for configuration or I/O errors and 2 when
//! any trial failed (outputs are still written).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use leo_jadce::harness::{run_sweep, write_outputs, Algorithm, ScenarioConfig, SweepSpec, FAILURES_FILE};

#[derive(Parser)]
#[command(name = "jadce", version, about = "Activity detection and channel estimation sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep over one axis and write trials.csv and summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `axis=v1,v2,...` with axis one of snr, L, p_a, K, d, M.
        #[arg(long)]
        sweep: String,
        /// Overrides `trials` from the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated, e.g. `vbi,somp`. Overrides `algorithms`.
        #[arg(long, value_delimiter = ',')]
        algos: Option<Vec<String>>,
        /// Also write per-iteration engine traces.
        #[arg(long)]
        trace: bool,
    },
    /// Check a config file and exit.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Trials(usize),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg_err = |e: leo_jadce::harness::ConfigError| Failure::Config(e.to_string());
    match cli.command {
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config).map_err(cfg_err)?;
            println!(
                "ok: K={} M={} L={} dims={:?} trials={}",
                cfg.devices,
                cfg.antennas,
                cfg.preamble_len(),
                cfg.dims,
                cfg.trials
            );
            Ok(())
        }
        Command::Run {
            config,
            sweep,
            trials,
            seed,
            out,
            algos,
            trace,
        } => {
            let mut cfg = ScenarioConfig::load(&config).map_err(cfg_err)?;
            if let Some(n) = trials {
                cfg.trials = n;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(names) = algos {
                cfg.algorithms = names
                    .iter()
                    .map(|n| n.parse::<Algorithm>())
                    .collect::<Result<_, _>>()
                    .map_err(cfg_err)?;
            }
            cfg.write_trace |= trace;
            cfg.validate().map_err(cfg_err)?;
            let spec = SweepSpec::parse(&sweep).map_err(cfg_err)?;
            spec.validate_against(&cfg).map_err(cfg_err)?;

            let outcome = run_sweep(&cfg, &spec).map_err(cfg_err)?;
            write_outputs(&out, spec.axis.as_str(), &outcome)
                .map_err(|e| Failure::Config(format!("cannot write to {}: {e}", out.display())))?;
            eprintln!(
                "{} records, {} failures written to {}",
                outcome.records.len(),
                outcome.failures.len(),
                out.display()
            );
            if outcome.failures.is_empty() {
                Ok(())
            } else {
                Err(Failure::Trials(outcome.failures.len()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Trials(n)) => {
            eprintln!("error: {n} trial(s) failed, see {FAILURES_FILE}");
            ExitCode::from(2)
        }
    }
}
