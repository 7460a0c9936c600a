use std::fmt;
use std::str::FromStr;

use super::config::{ConfigError, ScenarioConfig};
use crate::signal::factorize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Snr,
    /// Preamble length; each value is refactorised at the current order.
    L,
    Pa,
    K,
    /// Tensor order; each value refactorises the current length.
    D,
    M,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr",
            SweepAxis::L => "L",
            SweepAxis::Pa => "p_a",
            SweepAxis::K => "K",
            SweepAxis::D => "d",
            SweepAxis::M => "M",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepAxis::L | SweepAxis::K | SweepAxis::D | SweepAxis::M)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "snr" | "SNR" | "snr_db" => Ok(SweepAxis::Snr),
            "L" | "l" => Ok(SweepAxis::L),
            "p_a" | "pa" | "activity_prob" => Ok(SweepAxis::Pa),
            "K" | "k" | "devices" => Ok(SweepAxis::K),
            "d" | "D" | "order" => Ok(SweepAxis::D),
            "M" | "m" | "antennas" => Ok(SweepAxis::M),
            other => Err(ConfigError::Invalid(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Self {
        Self { axis, values }
    }

    /// Parses `axis=v1,v2,...`.
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let (axis, rest) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("sweep `{s}` is not of the form axis=v1,v2")))?;
        let axis: SweepAxis = axis.parse()?;
        let values = rest
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError::Invalid(format!("bad sweep value `{v}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(ConfigError::Invalid("sweep needs at least one value".into()));
        }
        Ok(Self { axis, values })
    }

    /// Stable text form of a sweep value, used in CSV rows and file names.
    pub fn value_label(&self, value: f64) -> String {
        format!("{value}")
    }

    /// `base` with the axis set to `value`.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = base.clone();
        if self.axis.is_integer() && (value.fract() != 0.0 || value < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "axis {} needs positive integer values, got {value}",
                self.axis
            )));
        }
        let n = value as usize;
        let refactor = |len: usize, order: usize| {
            factorize(len, order).map_err(|e| ConfigError::Invalid(e.to_string()))
        };
        match self.axis {
            SweepAxis::Snr => cfg.snr_db = value,
            SweepAxis::Pa => cfg.activity_prob = value,
            SweepAxis::K => cfg.devices = n,
            SweepAxis::M => cfg.antennas = n,
            SweepAxis::L => cfg.dims = refactor(n, base.dims.len())?,
            SweepAxis::D => cfg.dims = refactor(base.preamble_len(), n)?,
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate_against(&self, base: &ScenarioConfig) -> Result<(), ConfigError> {
        for &v in &self.values {
            self.apply(base, v)?;
        }
        Ok(())
    }
}
