use std::time::Instant;

use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Algorithm, ConfigError, ScenarioConfig};
use super::sweep::SweepSpec;
use crate::baselines::{amp_mmv, somp, AmpConfig, SompConfig};
use crate::channel::{device_state_matrix, draw_channels, draw_geometry, ChannelRealization, DeviceGeometry};
use crate::detection::{detect, error_probability, nmse, nmse_active};
use crate::random::{label, stream};
use crate::signal::{assemble_preamble_matrix, gen_preambles, noise_variance, received_matrix, synthesize_received, PreambleSet};
use crate::tensor::{ComplexTensor, DeviceStateMatrix};
use crate::vbi::{self, Problem, TraceRow};
use crate::C64;

/// Fixed per sweep point: preambles and device geometry.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub preambles: PreambleSet,
    pub geometry: DeviceGeometry,
    seed_words: [u64; 3],
}

/// One slot's ground truth and observation.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub channel: ChannelRealization,
    pub x: DeviceStateMatrix,
    pub y: ComplexTensor,
}

impl TrialInstance {
    pub fn alpha(&self) -> &[bool] {
        &self.channel.alpha
    }
}

impl Scenario {
    /// Streams are keyed by `(master_seed, axis, value)` so that each sweep
    /// point is reproducible on its own.
    pub fn new(cfg: ScenarioConfig, axis: &str, value: f64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let seed_words = [cfg.master_seed, label(axis), value.to_bits()];
        let mut rng = stream(&[seed_words[0], seed_words[1], seed_words[2], label("scenario")]);
        let preambles = gen_preambles(&cfg.dims, cfg.devices, &mut rng)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let geometry = draw_geometry(&cfg.geometry_params(), &mut rng)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(Self {
            cfg,
            preambles,
            geometry,
            seed_words,
        })
    }

    pub fn draw_trial(&self, trial: usize) -> TrialInstance {
        let [a, b, c] = self.seed_words;
        let mut rng = stream(&[a, b, c, trial as u64, label("trial")]);
        let channel = draw_channels(&self.cfg.link_budget(), &self.geometry, self.cfg.activity(), &mut rng)
            .expect("scenario config was validated");
        let x = device_state_matrix(&channel, &self.geometry.tx_power);
        let sigma2 = noise_variance(self.cfg.tx_power, self.cfg.snr_db);
        let y = synthesize_received(&self.preambles, &x, sigma2, &mut rng).expect("dimensions agree");
        TrialInstance { channel, x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub axis: String,
    pub value: String,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub pe: f64,
    /// `NaN` when the slot had no active device.
    pub nmse: f64,
    pub nmse_active: f64,
    pub iters: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub axis: String,
    pub value: String,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub value: String,
    pub trial: usize,
    pub iter: usize,
    pub residual: f64,
    pub max_column_energy: f64,
    pub rel_change: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
    /// Per sweep value label, in sweep order.
    pub traces: Vec<(String, Vec<TraceRecord>)>,
}

/// Result of one algorithm on one trial.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub x_hat: Mat<C64>,
    pub alpha_hat: Vec<bool>,
    pub iters: usize,
    pub trace: Vec<TraceRow>,
}

pub fn estimate(scenario: &Scenario, inst: &TrialInstance, algo: Algorithm) -> Result<Estimate, String> {
    let cfg = &scenario.cfg;
    match algo {
        Algorithm::Vbi => {
            let problem = Problem::new(&scenario.preambles, &inst.y).map_err(|e| e.to_string())?;
            let out = vbi::run(&problem, &cfg.engine_config()).map_err(|e| e.to_string())?;
            let det = detect(&out.state.m_x, cfg.threshold_ratio, cfg.tx_power).map_err(|e| e.to_string())?;
            Ok(Estimate {
                x_hat: out.state.m_x,
                alpha_hat: det.alpha_hat,
                iters: out.iterations,
                trace: out.trace,
            })
        }
        Algorithm::Somp => {
            let dict = assemble_preamble_matrix(&scenario.preambles);
            let somp_cfg = SompConfig {
                max_support: cfg.somp_support(),
                residual_tol: 1e-6,
            };
            let out = somp(&received_matrix(&inst.y), &dict, &somp_cfg).map_err(|e| e.to_string())?;
            Ok(Estimate {
                alpha_hat: out.activity(),
                iters: out.support.len(),
                x_hat: out.x_hat,
                trace: Vec::new(),
            })
        }
        Algorithm::Amp => {
            let dict = assemble_preamble_matrix(&scenario.preambles);
            let out = amp_mmv(&received_matrix(&inst.y), &dict, &AmpConfig::default()).map_err(|e| e.to_string())?;
            if out.diverged {
                return Err("AMP diverged".into());
            }
            let det = detect(&out.x_hat, cfg.threshold_ratio, cfg.tx_power).map_err(|e| e.to_string())?;
            Ok(Estimate {
                x_hat: out.x_hat,
                alpha_hat: det.alpha_hat,
                iters: out.iterations,
                trace: Vec::new(),
            })
        }
    }
}

type TrialResult = (Vec<TrialRecord>, Vec<TrialFailure>, Vec<TraceRecord>);

fn run_trial(scenario: &Scenario, axis: &str, value: &str, trial: usize) -> TrialResult {
    let inst = scenario.draw_trial(trial);
    let truth = inst.x.as_mat();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut trace = Vec::new();
    for &algo in &scenario.cfg.algorithms {
        let start = Instant::now();
        let est = estimate(scenario, &inst, algo);
        let wall_ms = if scenario.cfg.record_wall_time {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        match est {
            Ok(est) => {
                let pe = error_probability(&est.alpha_hat, inst.alpha()).expect("lengths agree");
                records.push(TrialRecord {
                    axis: axis.to_string(),
                    value: value.to_string(),
                    algorithm: algo,
                    trial,
                    pe,
                    nmse: nmse(&est.x_hat, truth).unwrap_or(f64::NAN),
                    nmse_active: nmse_active(&est.x_hat, truth, inst.alpha()).unwrap_or(f64::NAN),
                    iters: est.iters,
                    wall_ms,
                });
                if scenario.cfg.write_trace {
                    trace.extend(est.trace.iter().map(|row| TraceRecord {
                        value: value.to_string(),
                        trial,
                        iter: row.iter,
                        residual: row.residual,
                        max_column_energy: row.max_column_energy,
                        rel_change: row.rel_change,
                    }));
                }
            }
            Err(error) => failures.push(TrialFailure {
                axis: axis.to_string(),
                value: value.to_string(),
                algorithm: algo,
                trial,
                error,
            }),
        }
    }
    (records, failures, trace)
}

/// Runs every `(value, trial)` pair on the rayon pool. Output order is
/// sweep order, then trial, then algorithm, independent of scheduling.
pub fn run_sweep(base: &ScenarioConfig, sweep: &SweepSpec) -> Result<SweepOutcome, ConfigError> {
    let axis = sweep.axis.as_str();
    let scenarios = sweep
        .values
        .iter()
        .map(|&v| Scenario::new(sweep.apply(base, v)?, axis, v).map(|s| (sweep.value_label(v), s)))
        .collect::<Result<Vec<_>, _>>()?;
    let work: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|i| (0..base.trials).map(move |t| (i, t)))
        .collect();
    let results: Vec<TrialResult> = work
        .par_iter()
        .map(|&(i, t)| {
            let (label, scenario) = &scenarios[i];
            run_trial(scenario, axis, label, t)
        })
        .collect();
    let mut out = SweepOutcome::default();
    let mut traces: Vec<(String, Vec<TraceRecord>)> =
        scenarios.iter().map(|(l, _)| (l.clone(), Vec::new())).collect();
    for ((i, _), (records, failures, trace)) in work.iter().zip(results) {
        out.records.extend(records);
        out.failures.extend(failures);
        traces[*i].1.extend(trace);
    }
    if base.write_trace {
        out.traces = traces;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            devices: 12,
            antennas: 2,
            dims: vec![4, 4],
            activity_prob: 0.2,
            trials: 3,
            algorithms: vec![Algorithm::Vbi, Algorithm::Somp],
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn same_seed_same_records() {
        let sweep = SweepSpec::parse("snr=0,20").unwrap();
        let a = run_sweep(&small(), &sweep).unwrap();
        let b = run_sweep(&small(), &sweep).unwrap();
        assert_eq!(a.records.len(), 12);
        assert_eq!(format!("{:?}", a.records), format!("{:?}", b.records));
    }

    #[test]
    fn adding_trials_keeps_existing_streams() {
        let sweep = SweepSpec::parse("snr=10").unwrap();
        let a = run_sweep(&small(), &sweep).unwrap();
        let more = ScenarioConfig { trials: 5, ..small() };
        let b = run_sweep(&more, &sweep).unwrap();
        assert_eq!(format!("{:?}", a.records), format!("{:?}", &b.records[..a.records.len()]));
    }

    #[test]
    fn inactive_columns_are_exactly_zero() {
        let s = Scenario::new(small(), "snr", 10.0).unwrap();
        let inst = s.draw_trial(0);
        for k in 0..12 {
            if !inst.alpha()[k] {
                assert!((0..2).all(|i| inst.x.as_mat()[(i, k)] == C64::new(0.0, 0.0)));
            }
        }
    }

    #[test]
    fn traces_only_when_requested() {
        let sweep = SweepSpec::parse("snr=10").unwrap();
        assert!(run_sweep(&small(), &sweep).unwrap().traces.is_empty());
        let cfg = ScenarioConfig { write_trace: true, ..small() };
        let out = run_sweep(&cfg, &sweep).unwrap();
        assert_eq!(out.traces.len(), 1);
        assert!(!out.traces[0].1.is_empty());
    }
}
