//! Tensor-structured preambles and received-signal synthesis.

use faer::Mat;
use rand::Rng;
use thiserror::Error;

use crate::random::complex_gaussian;
use crate::tensor::{khatri_rao, kruskal, ComplexTensor, DeviceStateMatrix, FactorMatrices, TensorError};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("preamble dims {0:?} need d >= 2 and every l_i >= 2")]
    InvalidDims(Vec<usize>),
    #[error("no factorisation of L = {len} into {order} factors >= 2")]
    NoFactorisation { len: usize, order: usize },
    #[error("noise variance must be finite and non-negative, got {0}")]
    NoiseVariance(f64),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Per-device rank-1 preambles, stored through their factors.
#[derive(Debug, Clone)]
pub struct PreambleSet {
    factors: FactorMatrices,
}

impl PreambleSet {
    pub fn from_factors(factors: FactorMatrices) -> Self {
        Self { factors }
    }

    pub fn factors(&self) -> &FactorMatrices {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.dims()
    }

    pub fn len(&self) -> usize {
        self.factors.total_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_devices(&self) -> usize {
        self.factors.num_columns()
    }
}

fn check_dims(dims: &[usize]) -> Result<(), SignalError> {
    if dims.len() < 2 || dims.iter().any(|&l| l < 2) {
        return Err(SignalError::InvalidDims(dims.to_vec()));
    }
    Ok(())
}

/// Draws every factor column i.i.d. circular Gaussian and normalises it.
pub fn gen_preambles<R: Rng + ?Sized>(
    dims: &[usize],
    devices: usize,
    rng: &mut R,
) -> Result<PreambleSet, SignalError> {
    check_dims(dims)?;
    let mut factors = Vec::with_capacity(dims.len());
    for &l in dims {
        let mut a = Mat::<C64>::zeros(l, devices);
        for k in 0..devices {
            let mut norm_sq = 0.0;
            for i in 0..l {
                let z = complex_gaussian(rng, 1.0);
                norm_sq += z.norm_sqr();
                a[(i, k)] = z;
            }
            let s = norm_sq.sqrt().recip();
            for i in 0..l {
                a[(i, k)] *= s;
            }
        }
        factors.push(a);
    }
    Ok(PreambleSet::from_factors(FactorMatrices::new(factors)?))
}

/// `L × K` matrix whose column `k` is `a_{1,k} ⊗ .. ⊗ a_{d,k}`.
pub fn assemble_preamble_matrix(p: &PreambleSet) -> Mat<C64> {
    khatri_rao(p.factors().factors()).expect("factors share a column count")
}

/// `Y = [[A_1, .., A_d, X]] + N` with i.i.d. `CN(0, noise_var)` noise.
pub fn synthesize_received<R: Rng + ?Sized>(
    p: &PreambleSet,
    x: &DeviceStateMatrix,
    noise_var: f64,
    rng: &mut R,
) -> Result<ComplexTensor, SignalError> {
    if !(noise_var >= 0.0) || !noise_var.is_finite() {
        return Err(SignalError::NoiseVariance(noise_var));
    }
    let mut y = kruskal(p.factors(), x)?;
    if noise_var > 0.0 {
        for v in y.data_mut() {
            *v += complex_gaussian(rng, noise_var);
        }
    }
    Ok(y)
}

/// Noise variance for `SNR = 10 log10(ξ / σ²)`.
pub fn noise_variance(tx_power: f64, snr_db: f64) -> f64 {
    tx_power * 10f64.powf(-snr_db / 10.0)
}

/// `L × M` matrix form of the received signal: row `j` holds the `M`
/// antenna samples at leading canonical index `j`.
pub fn received_matrix(y: &ComplexTensor) -> Mat<C64> {
    let m = y.last_dim();
    let data = y.data();
    Mat::from_fn(y.lead_len(), m, |j, r| data[j * m + r])
}

/// Splits `len` into `order` factors, each at least 2, in non-increasing
/// order, choosing the most balanced split (smallest largest factor, then
/// lexicographically smallest).
pub fn factorize(len: usize, order: usize) -> Result<Vec<usize>, SignalError> {
    fn search(rem: usize, slots: usize, cap: usize, cur: &mut Vec<usize>, best: &mut Option<Vec<usize>>) {
        if slots == 1 {
            if rem >= 2 && rem <= cap {
                cur.push(rem);
                if best.as_ref().map_or(true, |b| cur.as_slice() < b.as_slice()) {
                    *best = Some(cur.clone());
                }
                cur.pop();
            }
            return;
        }
        for f in (2..=cap.min(rem)).rev() {
            if rem % f == 0 {
                cur.push(f);
                search(rem / f, slots - 1, f, cur, best);
                cur.pop();
            }
        }
    }
    if order < 2 {
        return Err(SignalError::NoFactorisation { len, order });
    }
    let mut best = None;
    search(len, order, len, &mut Vec::with_capacity(order), &mut best);
    best.ok_or(SignalError::NoFactorisation { len, order })
}
