//! Ground-truth LEO channel generation: link budget, rain attenuation,
//! satellite antenna pattern and Rician small-scale fading.

use std::f64::consts::PI;

use faer::Mat;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::random::complex_gaussian;
use crate::special::bessel_j;
use crate::tensor::DeviceStateMatrix;
use crate::C64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Argument `φ` at which the antenna pattern power `ω(φ)²` drops to 1/2.
pub const HALF_POWER_PHI: f64 = 2.071_231_178_422_006_5;

/// Dish diameter putting the half-power point at 0.4° off-axis at 30 GHz.
pub const DEFAULT_DISH_DIAMETER_M: f64 = 0.943_722_521_439_293_9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("link budget field `{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("invalid range for `{name}`: [{low}, {high}]")]
    Range {
        name: &'static str,
        low: f64,
        high: f64,
    },
    #[error("activity probability {0} outside [0, 1]")]
    ActivityProbability(f64),
    #[error("cannot activate {active} of {devices} devices")]
    ActiveCount { active: usize, devices: usize },
    #[error("off-axis angle {0} rad outside (-π/2, π/2)")]
    OffAxis(f64),
}

/// Satellite link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub carrier_freq_hz: f64,
    pub altitude_m: f64,
    pub bandwidth_hz: f64,
    /// Receiver noise temperature. The gain formula uses the combined
    /// `g_over_t_db` figure, so this only feeds [`LinkBudget::noise_power_w`].
    pub noise_temp_k: f64,
    pub boltzmann: f64,
    pub g_over_t_db: f64,
    pub dish_diameter_m: f64,
    pub three_db_angle_deg: f64,
    /// Mean rain attenuation as a (non-positive) dB power gain.
    pub rain_mean_db: f64,
    pub rain_std_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 30e9,
            altitude_m: 1_000e3,
            bandwidth_hz: 25e6,
            noise_temp_k: 290.0,
            boltzmann: 1.38e-23,
            g_over_t_db: 34.0,
            dish_diameter_m: DEFAULT_DISH_DIAMETER_M,
            three_db_angle_deg: 0.4,
            rain_mean_db: -2.6,
            rain_std_db: 1.63,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let positive = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("altitude_m", self.altitude_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_temp_k", self.noise_temp_k),
            ("boltzmann", self.boltzmann),
            ("dish_diameter_m", self.dish_diameter_m),
            ("three_db_angle_deg", self.three_db_angle_deg),
            ("rain_std_db", self.rain_std_db),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ChannelError::NonPositive(name));
            }
        }
        Ok(())
    }

    /// Free-space loss `(c / (4π f d0))²`.
    pub fn free_space_loss(&self) -> f64 {
        (SPEED_OF_LIGHT / (4.0 * PI * self.carrier_freq_hz * self.altitude_m)).powi(2)
    }

    pub fn noise_power_w(&self) -> f64 {
        self.boltzmann * self.noise_temp_k * self.bandwidth_hz
    }
}

/// Large-scale power gain
/// `(c/(4π f d0))² · 10^(G/T/10) / (κ B) · 10^(r_dB/10)`.
pub fn large_scale_gain(lb: &LinkBudget, rain_db: f64) -> f64 {
    debug_assert!(rain_db <= 0.0);
    lb.free_space_loss() * 10f64.powf(lb.g_over_t_db / 10.0) / (lb.boltzmann * lb.bandwidth_hz)
        * 10f64.powf(rain_db / 10.0)
}

/// Parameters `(m, s)` of `z ~ N(m, s²)` such that `exp(z)` has mean
/// `|mean_db|` and standard deviation `std_db`.
pub fn rain_lognormal_params(mean_db: f64, std_db: f64) -> (f64, f64) {
    let mean = mean_db.abs();
    let s2 = (1.0 + (std_db / mean).powi(2)).ln();
    (mean.ln() - 0.5 * s2, s2.sqrt())
}

/// Draws a rain attenuation `r_dB = -exp(z) <= 0` whose magnitude is
/// lognormal with the given mean and standard deviation.
pub fn sample_rain_db<R: Rng + ?Sized>(mean_db: f64, std_db: f64, rng: &mut R) -> f64 {
    let (m, s) = rain_lognormal_params(mean_db, std_db);
    let z = if s > 0.0 {
        Normal::new(m, s).expect("finite lognormal parameters").sample(rng)
    } else {
        m
    };
    -z.exp()
}

/// Normalised circular-aperture pattern `J1(φ)/(2φ) + 36 J3(φ)/φ³`,
/// continuous at `φ = 0` where it equals 1.
pub fn antenna_pattern(phi: f64) -> f64 {
    let p = phi.abs();
    if p < 1e-6 {
        // leading series terms: 1/4 + 3/4 with O(φ²) corrections
        return 1.0 - p * p * (1.0 / 32.0 + 3.0 / 64.0);
    }
    bessel_j(1, p) / (2.0 * p) + 36.0 * bessel_j(3, p) / (p * p * p)
}

/// Receive antenna gain for a device at off-axis angle `theta` (radians).
pub fn antenna_gain(theta: f64, lb: &LinkBudget) -> f64 {
    debug_assert!(theta.abs() < 0.5 * PI);
    let phi = PI * lb.dish_diameter_m * lb.carrier_freq_hz / SPEED_OF_LIGHT * theta.sin();
    antenna_pattern(phi)
}

/// Solves `ω(φ)² = 1/2` on the main lobe by bisection.
pub fn half_power_phi() -> f64 {
    let (mut lo, mut hi) = (0.1f64, 3.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if antenna_pattern(mid).powi(2) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Dish diameter whose half-power point sits at `three_db_angle_deg`.
pub fn calibrate_dish_diameter(three_db_angle_deg: f64, carrier_freq_hz: f64) -> f64 {
    half_power_phi() * SPEED_OF_LIGHT / (PI * carrier_freq_hz * three_db_angle_deg.to_radians().sin())
}

/// Per-device quantities that stay fixed over a scenario.
#[derive(Debug, Clone)]
pub struct DeviceGeometry {
    /// Off-axis angles in radians.
    pub theta: Vec<f64>,
    /// Rician factors (may be `f64::INFINITY` for pure line of sight).
    pub rician: Vec<f64>,
    pub los_norm_sq: Vec<f64>,
    pub nlos_var: Vec<f64>,
    /// Preamble transmit powers (linear).
    pub tx_power: Vec<f64>,
    /// `M × K`; column `k` holds the entries of the LOS row vector `h_k^LOS`.
    pub los: Mat<C64>,
}

impl DeviceGeometry {
    pub fn num_devices(&self) -> usize {
        self.theta.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.los.nrows()
    }
}

/// Distribution of the scenario-level geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    pub devices: usize,
    pub antennas: usize,
    pub theta_max_deg: f64,
    pub rician_factor: f64,
    pub los_norm_sq: (f64, f64),
    pub nlos_var: (f64, f64),
    pub tx_power: f64,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn check_range(name: &'static str, (low, high): (f64, f64)) -> Result<(), ChannelError> {
    if !(low > 0.0) || !(high >= low) || !high.is_finite() {
        return Err(ChannelError::Range { name, low, high });
    }
    Ok(())
}

/// Draws off-axis angles `U[0, θ_max]`, LOS norms, NLOS variances and unit
/// modulus LOS phase vectors scaled to the drawn norm.
pub fn draw_geometry<R: Rng + ?Sized>(
    params: &GeometryParams,
    rng: &mut R,
) -> Result<DeviceGeometry, ChannelError> {
    check_range("los_norm_sq", params.los_norm_sq)?;
    check_range("nlos_var", params.nlos_var)?;
    if !(params.rician_factor >= 0.0) {
        return Err(ChannelError::NonPositive("rician_factor"));
    }
    if !(params.tx_power > 0.0) {
        return Err(ChannelError::NonPositive("tx_power"));
    }
    let theta_max = params.theta_max_deg.to_radians();
    if !(theta_max >= 0.0) || theta_max >= 0.5 * PI {
        return Err(ChannelError::OffAxis(theta_max));
    }
    let (k, m) = (params.devices, params.antennas);
    let theta = (0..k).map(|_| uniform(rng, (0.0, theta_max))).collect();
    let los_norm_sq: Vec<f64> = (0..k).map(|_| uniform(rng, params.los_norm_sq)).collect();
    let nlos_var = (0..k).map(|_| uniform(rng, params.nlos_var)).collect();
    let mut los = Mat::<C64>::zeros(m, k);
    for (c, &norm_sq) in los_norm_sq.iter().enumerate() {
        let amp = (norm_sq / m as f64).sqrt();
        for r in 0..m {
            los[(r, c)] = C64::from_polar(amp, rng.gen_range(0.0..2.0 * PI));
        }
    }
    Ok(DeviceGeometry {
        theta,
        rician: vec![params.rician_factor; k],
        los_norm_sq,
        nlos_var,
        tx_power: vec![params.tx_power; k],
        los,
    })
}

/// How many devices wake up in a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activity {
    /// Independent `Bernoulli(p)` per device.
    Bernoulli(f64),
    /// Exactly this many devices, chosen uniformly.
    Exact(usize),
}

/// One slot's ground truth.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `M × K`; column `k` is `h_k^H`. Populated for every device.
    pub h: Mat<C64>,
    pub alpha: Vec<bool>,
    /// Large-scale gains (linear).
    pub g: Vec<f64>,
    pub omega: Vec<f64>,
    pub rain_db: Vec<f64>,
}

impl ChannelRealization {
    pub fn active_count(&self) -> usize {
        self.alpha.iter().filter(|&&a| a).count()
    }
}

fn rician_weights(lambda: f64) -> (f64, f64) {
    if lambda.is_infinite() {
        (1.0, 0.0)
    } else {
        ((lambda / (lambda + 1.0)).sqrt(), (1.0 / (lambda + 1.0)).sqrt())
    }
}

/// Draws activity, rain and NLOS fading for one slot:
/// `h_k = ω_k (√(λg/(λ+1)) h_LOS + √(g/(λ+1)) h_NLOS)`.
pub fn draw_channels<R: Rng + ?Sized>(
    lb: &LinkBudget,
    geom: &DeviceGeometry,
    activity: Activity,
    rng: &mut R,
) -> Result<ChannelRealization, ChannelError> {
    let (k, m) = (geom.num_devices(), geom.num_antennas());
    let alpha = match activity {
        Activity::Bernoulli(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(ChannelError::ActivityProbability(p));
            }
            (0..k).map(|_| rng.gen::<f64>() < p).collect()
        }
        Activity::Exact(n) => {
            if n > k {
                return Err(ChannelError::ActiveCount {
                    active: n,
                    devices: k,
                });
            }
            let mut alpha = vec![false; k];
            for i in sample(rng, k, n) {
                alpha[i] = true;
            }
            alpha
        }
    };
    let rain_db: Vec<f64> = (0..k)
        .map(|_| sample_rain_db(lb.rain_mean_db, lb.rain_std_db, rng))
        .collect();
    let g: Vec<f64> = rain_db.iter().map(|&r| large_scale_gain(lb, r)).collect();
    let omega: Vec<f64> = geom.theta.iter().map(|&t| antenna_gain(t, lb)).collect();
    let mut h = Mat::<C64>::zeros(m, k);
    for c in 0..k {
        let (w_los, w_nlos) = rician_weights(geom.rician[c]);
        let amp = omega[c] * g[c].sqrt();
        for r in 0..m {
            let nlos = complex_gaussian(rng, geom.nlos_var[c]);
            let row_entry = amp * (w_los * geom.los[(r, c)] + w_nlos * nlos);
            h[(r, c)] = row_entry.conj();
        }
    }
    Ok(ChannelRealization {
        h,
        alpha,
        g,
        omega,
        rain_db,
    })
}

/// `X(:, k) = α_k √ξ_k h_k^H`; inactive columns are exactly zero.
pub fn device_state_matrix(ch: &ChannelRealization, tx_power: &[f64]) -> DeviceStateMatrix {
    let (m, k) = (ch.h.nrows(), ch.h.ncols());
    let mut x = Mat::<C64>::zeros(m, k);
    for c in 0..k {
        if !ch.alpha[c] {
            continue;
        }
        let s = tx_power[c].sqrt();
        for r in 0..m {
            x[(r, c)] = ch.h[(r, c)] * s;
        }
    }
    DeviceStateMatrix::new(x)
}
