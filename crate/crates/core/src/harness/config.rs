use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Activity, GeometryParams, LinkBudget, DEFAULT_DISH_DIAMETER_M};
use crate::vbi::{EngineConfig, UpdateSchedule};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Vbi,
    Somp,
    Amp,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Vbi => "vbi",
            Algorithm::Somp => "somp",
            Algorithm::Amp => "amp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vbi" => Ok(Algorithm::Vbi),
            "somp" => Ok(Algorithm::Somp),
            "amp" => Ok(Algorithm::Amp),
            other => Err(invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Listing,
    Sequential,
}

/// Every physical and algorithmic knob of one scenario. Missing keys take
/// the defaults below; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub carrier_freq_hz: f64,
    pub altitude_m: f64,
    pub bandwidth_hz: f64,
    pub noise_temp_k: f64,
    pub boltzmann: f64,
    pub g_over_t_db: f64,
    pub dish_diameter_m: f64,
    pub three_db_angle_deg: f64,
    pub rain_mean_db: f64,
    pub rain_std_db: f64,

    pub devices: usize,
    pub antennas: usize,
    pub activity_prob: f64,
    /// Draw exactly this many active devices instead of Bernoulli activity.
    pub active_devices: Option<usize>,
    pub snr_db: f64,
    pub dims: Vec<usize>,
    pub rician_factor: f64,
    pub los_norm_sq_min: f64,
    pub los_norm_sq_max: f64,
    pub nlos_var_min: f64,
    pub nlos_var_max: f64,
    pub theta_max_deg: f64,
    pub tx_power: f64,

    pub eps: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Picked on a held-out seed by `examples/calibrate_threshold.rs`.
    pub threshold_ratio: f64,
    pub schedule: Schedule,
    /// Defaults to `ceil(1.5 p_a K)`.
    pub somp_max_support: Option<usize>,

    pub trials: usize,
    pub master_seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// When false the `wall_ms` column is written as 0 so that output is
    /// byte-reproducible.
    pub record_wall_time: bool,
    pub write_trace: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let lb = LinkBudget::default();
        Self {
            carrier_freq_hz: lb.carrier_freq_hz,
            altitude_m: lb.altitude_m,
            bandwidth_hz: lb.bandwidth_hz,
            noise_temp_k: lb.noise_temp_k,
            boltzmann: lb.boltzmann,
            g_over_t_db: lb.g_over_t_db,
            dish_diameter_m: DEFAULT_DISH_DIAMETER_M,
            three_db_angle_deg: lb.three_db_angle_deg,
            rain_mean_db: lb.rain_mean_db,
            rain_std_db: lb.rain_std_db,
            devices: 500,
            antennas: 8,
            activity_prob: 0.1,
            active_devices: None,
            snr_db: 10.0,
            dims: vec![20, 20],
            rician_factor: 8.0,
            los_norm_sq_min: 0.6,
            los_norm_sq_max: 0.7,
            nlos_var_min: 0.2,
            nlos_var_max: 0.25,
            theta_max_deg: 0.4,
            tx_power: 1.0,
            eps: 1e-6,
            max_iters: 35,
            rel_tol: 1e-3,
            threshold_ratio: 0.25,
            schedule: Schedule::Sequential,
            somp_max_support: None,
            trials: 10,
            master_seed: 1,
            algorithms: vec![Algorithm::Vbi],
            record_wall_time: false,
            write_trace: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// `L = ∏ dims`.
    pub fn preamble_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget {
            carrier_freq_hz: self.carrier_freq_hz,
            altitude_m: self.altitude_m,
            bandwidth_hz: self.bandwidth_hz,
            noise_temp_k: self.noise_temp_k,
            boltzmann: self.boltzmann,
            g_over_t_db: self.g_over_t_db,
            dish_diameter_m: self.dish_diameter_m,
            three_db_angle_deg: self.three_db_angle_deg,
            rain_mean_db: self.rain_mean_db,
            rain_std_db: self.rain_std_db,
        }
    }

    pub fn geometry_params(&self) -> GeometryParams {
        GeometryParams {
            devices: self.devices,
            antennas: self.antennas,
            theta_max_deg: self.theta_max_deg,
            rician_factor: self.rician_factor,
            los_norm_sq: (self.los_norm_sq_min, self.los_norm_sq_max),
            nlos_var: (self.nlos_var_min, self.nlos_var_max),
            tx_power: self.tx_power,
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            eps: self.eps,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            threshold_ratio: self.threshold_ratio,
            schedule: match self.schedule {
                Schedule::Listing => UpdateSchedule::Listing,
                Schedule::Sequential => UpdateSchedule::Sequential,
            },
        }
    }

    pub fn activity(&self) -> Activity {
        match self.active_devices {
            Some(n) => Activity::Exact(n),
            None => Activity::Bernoulli(self.activity_prob),
        }
    }

    pub fn somp_support(&self) -> usize {
        self.somp_max_support.unwrap_or_else(|| {
            crate::baselines::SompConfig::for_activity(self.activity_prob, self.devices).max_support
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.link_budget().validate().map_err(|e| invalid(e.to_string()))?;
        if self.rain_mean_db > 0.0 {
            return Err(invalid("rain_mean_db must be <= 0"));
        }
        if self.devices == 0 || self.antennas == 0 {
            return Err(invalid("devices and antennas must be positive"));
        }
        if self.dims.len() < 2 || self.dims.iter().any(|&l| l < 2) {
            return Err(invalid(format!("dims {:?} need d >= 2 and every l_i >= 2", self.dims)));
        }
        if !(0.0..=1.0).contains(&self.activity_prob) {
            return Err(invalid(format!("activity_prob {} outside [0, 1]", self.activity_prob)));
        }
        if let Some(n) = self.active_devices {
            if n > self.devices {
                return Err(invalid(format!("active_devices {n} exceeds devices {}", self.devices)));
            }
        }
        if !self.snr_db.is_finite() {
            return Err(invalid("snr_db must be finite"));
        }
        if !(self.rician_factor >= 0.0) {
            return Err(invalid("rician_factor must be >= 0"));
        }
        for (name, lo, hi) in [
            ("los_norm_sq", self.los_norm_sq_min, self.los_norm_sq_max),
            ("nlos_var", self.nlos_var_min, self.nlos_var_max),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(invalid(format!("{name} range [{lo}, {hi}] is invalid")));
            }
        }
        if !(self.theta_max_deg >= 0.0 && self.theta_max_deg < 90.0) {
            return Err(invalid("theta_max_deg must lie in [0, 90)"));
        }
        if !(self.tx_power > 0.0) {
            return Err(invalid("tx_power must be positive"));
        }
        self.engine_config().validate().map_err(|e| invalid(e.to_string()))?;
        if let Some(s) = self.somp_max_support {
            if s == 0 || s > self.devices {
                return Err(invalid(format!("somp_max_support {s} outside [1, devices]")));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(invalid("at least one algorithm is required"));
        }
        Ok(())
    }
}
