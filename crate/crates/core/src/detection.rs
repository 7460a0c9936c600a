//! Activity decisions, CSI extraction and the two figures of merit.

use faer::Mat;
use thiserror::Error;

use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("threshold ratio {0} outside (0, 1)")]
    Ratio(f64),
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("shape mismatch: {0:?} vs {1:?}")]
    Shape((usize, usize), (usize, usize)),
    #[error("reference has zero energy")]
    ZeroReference,
}

#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub alpha_hat: Vec<bool>,
    pub theta: f64,
    /// Estimated channels; zero for every column declared inactive.
    pub h_hat: Mat<C64>,
}

pub fn column_energy(m: &Mat<C64>, k: usize) -> f64 {
    (0..m.nrows()).map(|i| m[(i, k)].norm_sqr()).sum()
}

/// `θ = M (r max|M_X(m,n)|)²`; device `k` is active iff
/// `‖M_X(:,k)‖² >= θ`, with CSI `M_X(:,k) / √ξ`. An all-zero `M_X`
/// declares every device silent.
pub fn detect(m_x: &Mat<C64>, r: f64, tx_power: f64) -> Result<DetectionResult, MetricError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(MetricError::Ratio(r));
    }
    let (m, k) = (m_x.nrows(), m_x.ncols());
    let mut peak = 0.0f64;
    for j in 0..k {
        for i in 0..m {
            peak = peak.max(m_x[(i, j)].norm());
        }
    }
    let theta = m as f64 * (r * peak).powi(2);
    let alpha_hat: Vec<bool> = (0..k)
        .map(|j| peak > 0.0 && column_energy(m_x, j) >= theta)
        .collect();
    let s = 1.0 / tx_power.sqrt();
    let h_hat = Mat::from_fn(m, k, |i, j| {
        if alpha_hat[j] {
            m_x[(i, j)] * s
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(DetectionResult {
        alpha_hat,
        theta,
        h_hat,
    })
}

/// `(misses + false alarms) / K`.
pub fn error_probability(alpha_hat: &[bool], alpha: &[bool]) -> Result<f64, MetricError> {
    if alpha_hat.len() != alpha.len() {
        return Err(MetricError::Length(alpha_hat.len(), alpha.len()));
    }
    if alpha.is_empty() {
        return Ok(0.0);
    }
    let wrong = alpha_hat.iter().zip(alpha).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / alpha.len() as f64)
}

fn check_shape(a: &Mat<C64>, b: &Mat<C64>) -> Result<(), MetricError> {
    if (a.nrows(), a.ncols()) != (b.nrows(), b.ncols()) {
        return Err(MetricError::Shape((a.nrows(), a.ncols()), (b.nrows(), b.ncols())));
    }
    Ok(())
}

/// `‖X̂ - X‖_F² / ‖X‖_F²` over the full matrix.
pub fn nmse(x_hat: &Mat<C64>, x: &Mat<C64>) -> Result<f64, MetricError> {
    check_shape(x_hat, x)?;
    let den = x.squared_norm_l2();
    if den == 0.0 {
        return Err(MetricError::ZeroReference);
    }
    Ok((x_hat - x).squared_norm_l2() / den)
}

/// NMSE restricted to the truly active columns.
pub fn nmse_active(x_hat: &Mat<C64>, x: &Mat<C64>, alpha: &[bool]) -> Result<f64, MetricError> {
    check_shape(x_hat, x)?;
    if alpha.len() != x.ncols() {
        return Err(MetricError::Length(alpha.len(), x.ncols()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, _) in alpha.iter().enumerate().filter(|(_, &a)| a) {
        for i in 0..x.nrows() {
            num += (x_hat[(i, k)] - x[(i, k)]).norm_sqr();
            den += x[(i, k)].norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(MetricError::ZeroReference);
    }
    Ok(num / den)
}
