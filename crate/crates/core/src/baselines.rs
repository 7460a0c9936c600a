//! Structure-blind reference receivers working on the `L × M` matrix form
//! `Y = Φ X^T + N`.

use faer::Mat;
use thiserror::Error;

use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("dictionary has {dict} rows but the observation has {obs}")]
    Rows { dict: usize, obs: usize },
    #[error("max_support {support} exceeds device count {devices}")]
    Support { support: usize, devices: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SompConfig {
    pub max_support: usize,
    /// Stop once `‖R‖_F / ‖Y‖_F` drops below this.
    pub residual_tol: f64,
}

impl SompConfig {
    /// `max_support = ceil(1.5 p_a K)`.
    pub fn for_activity(activity: f64, devices: usize) -> Self {
        let s = (1.5 * activity * devices as f64).ceil() as usize;
        Self {
            max_support: s.clamp(1, devices.max(1)),
            residual_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SompOutput {
    /// Selected devices in selection order.
    pub support: Vec<usize>,
    /// `M × K`, zero off the support.
    pub x_hat: Mat<C64>,
    /// `‖R‖_F` before the first and after every selection.
    pub residual_norms: Vec<f64>,
    /// Set when the next atom was linearly dependent on the chosen ones.
    pub rank_deficient: bool,
}

impl SompOutput {
    pub fn activity(&self) -> Vec<bool> {
        let mut a = vec![false; self.x_hat.ncols()];
        for &k in &self.support {
            a[k] = true;
        }
        a
    }
}

fn col(m: &Mat<C64>, k: usize) -> Vec<C64> {
    (0..m.nrows()).map(|i| m[(i, k)]).collect()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Simultaneous OMP: pick the atom maximising `Σ_m |a_k^H r_m|`, refit by
/// least squares on the support (incremental QR), repeat.
pub fn somp(y: &Mat<C64>, dict: &Mat<C64>, cfg: &SompConfig) -> Result<SompOutput, BaselineError> {
    let (l, m) = (y.nrows(), y.ncols());
    let k = dict.ncols();
    if dict.nrows() != l {
        return Err(BaselineError::Rows { dict: dict.nrows(), obs: l });
    }
    if cfg.max_support > k {
        return Err(BaselineError::Support { support: cfg.max_support, devices: k });
    }
    let y_norm = y.squared_norm_l2().sqrt();
    let mut residual = y.clone();
    let mut residual_norms = vec![y_norm];
    let mut support = Vec::new();
    let mut q: Vec<Vec<C64>> = Vec::new();
    // upper-triangular factor, column j holds the coefficients of atom j
    let mut r_cols: Vec<Vec<C64>> = Vec::new();
    let mut chosen = vec![false; k];
    let mut rank_deficient = false;

    while support.len() < cfg.max_support && y_norm > 0.0 {
        if *residual_norms.last().unwrap() <= cfg.residual_tol * y_norm {
            break;
        }
        let corr = dict.adjoint() * &residual;
        let best = (0..k)
            .filter(|&j| !chosen[j])
            .map(|j| (j, (0..m).map(|i| corr[(j, i)].norm()).sum::<f64>()))
            .fold(None, |acc: Option<(usize, f64)>, cand| match acc {
                Some(a) if a.1 >= cand.1 => Some(a),
                _ => Some(cand),
            });
        let Some((j, _)) = best else { break };
        // modified Gram-Schmidt, applied twice for stability
        let atom = col(dict, j);
        let atom_norm = dot(&atom, &atom).re.sqrt();
        let mut v = atom.clone();
        let mut coeffs = vec![C64::new(0.0, 0.0); q.len() + 1];
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                coeffs[i] += c;
                for (vv, qq) in v.iter_mut().zip(qi) {
                    *vv -= c * qq;
                }
            }
        }
        let norm = dot(&v, &v).re.sqrt();
        if norm <= 1e-10 * atom_norm.max(f64::MIN_POSITIVE) {
            rank_deficient = true;
            break;
        }
        coeffs[q.len()] = C64::new(norm, 0.0);
        for vv in v.iter_mut() {
            *vv /= norm;
        }
        for c in 0..m {
            let proj = (0..l).map(|i| v[i].conj() * residual[(i, c)]).sum::<C64>();
            for i in 0..l {
                residual[(i, c)] -= proj * v[i];
            }
        }
        q.push(v);
        r_cols.push(coeffs);
        chosen[j] = true;
        support.push(j);
        residual_norms.push(residual.squared_norm_l2().sqrt());
    }

    // back-substitution R c = Q^H y per antenna
    let s = support.len();
    let mut x_hat = Mat::<C64>::zeros(m, k);
    for c in 0..m {
        let yc = col(y, c);
        let rhs: Vec<C64> = q.iter().map(|qi| dot(qi, &yc)).collect();
        let mut sol = vec![C64::new(0.0, 0.0); s];
        for i in (0..s).rev() {
            let mut acc = rhs[i];
            for jj in i + 1..s {
                acc -= r_cols[jj][i] * sol[jj];
            }
            sol[i] = acc / r_cols[i][i];
        }
        for (i, &dev) in support.iter().enumerate() {
            x_hat[(c, dev)] = sol[i];
        }
    }
    Ok(SompOutput {
        support,
        x_hat,
        residual_norms,
        rank_deficient,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpConfig {
    pub max_iters: usize,
    /// Threshold in units of the estimated residual row norm.
    pub threshold_scale: f64,
    pub damping: f64,
    pub tol: f64,
}

impl Default for AmpConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            threshold_scale: 1.5,
            damping: 0.5,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AmpOutput {
    pub x_hat: Mat<C64>,
    pub iterations: usize,
    pub diverged: bool,
}

/// Row-wise soft-threshold AMP for `Y = Φ B + N`, `B = X^T`.
pub fn amp_mmv(y: &Mat<C64>, dict: &Mat<C64>, cfg: &AmpConfig) -> Result<AmpOutput, BaselineError> {
    let (l, m) = (y.nrows(), y.ncols());
    let k = dict.ncols();
    if dict.nrows() != l {
        return Err(BaselineError::Rows { dict: dict.nrows(), obs: l });
    }
    let y_energy = y.squared_norm_l2();
    let mut b = Mat::<C64>::zeros(k, m);
    let mut z = y.clone();
    let mut diverged = false;
    let mut iterations = 0;
    if y_energy == 0.0 {
        return Ok(AmpOutput { x_hat: Mat::zeros(m, k), iterations, diverged });
    }
    let ratio = k as f64 / l as f64;
    for it in 1..=cfg.max_iters {
        iterations = it;
        let pseudo = &b + dict.adjoint() * &z;
        let sigma = (z.squared_norm_l2() / (l * m) as f64).sqrt();
        let tau = cfg.threshold_scale * sigma * (m as f64).sqrt();
        let mut next = Mat::<C64>::zeros(k, m);
        let mut onsager = 0.0;
        let dims = 2.0 * m as f64;
        for j in 0..k {
            let norm = (0..m).map(|c| pseudo[(j, c)].norm_sqr()).sum::<f64>().sqrt();
            if norm > tau {
                let shrink = 1.0 - tau / norm;
                for c in 0..m {
                    next[(j, c)] = pseudo[(j, c)] * shrink;
                }
                onsager += 1.0 - (dims - 1.0) / dims * tau / norm;
            }
        }
        onsager /= k as f64;
        let next = Mat::from_fn(k, m, |i, c| b[(i, c)] * cfg.damping + next[(i, c)] * (1.0 - cfg.damping));
        let z_new = y - dict * &next + Mat::from_fn(l, m, |i, c| z[(i, c)] * (ratio * onsager));
        let change = (&next - &b).squared_norm_l2().sqrt() / next.squared_norm_l2().sqrt().max(f64::MIN_POSITIVE);
        b = next;
        z = z_new;
        let z_energy = z.squared_norm_l2();
        if !z_energy.is_finite() || z_energy > 1e6 * y_energy {
            diverged = true;
            break;
        }
        if change < cfg.tol {
            break;
        }
    }
    Ok(AmpOutput {
        x_hat: b.transpose().to_owned(),
        iterations,
        diverged,
    })
}
