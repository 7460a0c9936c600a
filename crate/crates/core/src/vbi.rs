//! Mean-field variational Bayesian receiver.
//!
//! Model: the mode-(d+1) unfolding `Y_u` (`M × L`) of the received tensor is
//! `X Φ^T + N`, with `Φ = A_1 ⋄ .. ⋄ A_d`, noise precision `β`, and each
//! column `x_k ~ CN(μ_k^{-1} 1_M, v_k^{-1} I)`. `μ_k`, `v_k` and `β` carry
//! Gamma-type hyperpriors parameterised by a small `ε`.
//!
//! The factor `q(X)` shares one `K × K` row covariance `C_X`, so
//! `E[X^H X] = M_X^H M_X + M C_X`.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use thiserror::Error;

use crate::signal::PreambleSet;
use crate::special::{hyp1f1, ln_gamma_signed, SignedLogValue, SpecialFnError};
use crate::tensor::{hadamard, unfold_last, ComplexTensor};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VbiError {
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precision matrix not positive definite at iteration {iter}")]
    NotPositiveDefinite { iter: usize },
    #[error("non-finite {what} at iteration {iter}")]
    NonFinite { iter: usize, what: &'static str },
    #[error("shape parameter a_v[{device}] = {value} is not positive at iteration {iter}")]
    NonPositiveShape { iter: usize, device: usize, value: f64 },
    #[error("expected residual is negative ({value}) at iteration {iter}")]
    NegativeResidual { iter: usize, value: f64 },
    #[error(transparent)]
    Special(#[from] SpecialFnError),
}

/// Which iterate the `q(μ)` and `q(v)` updates read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateSchedule {
    /// `q(μ)` and `q(v)` use `M_X`, `C_X` from the previous sweep. Not a
    /// coordinate ascent, so the free energy may oscillate.
    Listing,
    /// Every factor uses the freshest statistics (Gauss-Seidel). Default.
    Sequential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub eps: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub threshold_ratio: f64,
    pub schedule: UpdateSchedule,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            max_iters: 35,
            rel_tol: 1e-3,
            threshold_ratio: 0.25,
            schedule: UpdateSchedule::Sequential,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), VbiError> {
        if !(self.eps > 0.0 && self.eps <= 1e-2) {
            return Err(VbiError::Config(format!("eps = {} outside (0, 1e-2]", self.eps)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(VbiError::Config(format!("rel_tol = {} must be positive", self.rel_tol)));
        }
        if self.max_iters == 0 {
            return Err(VbiError::Config("max_iters must be at least 1".into()));
        }
        if !(self.threshold_ratio > 0.0 && self.threshold_ratio < 1.0) {
            return Err(VbiError::Config(format!(
                "threshold_ratio = {} outside (0, 1)",
                self.threshold_ratio
            )));
        }
        Ok(())
    }
}

/// Quantities that stay fixed while the engine iterates.
#[derive(Debug, Clone)]
pub struct Problem {
    /// `G = ⊙_i (A_i^H A_i)^*`, `K × K`.
    pub gram: Mat<C64>,
    /// `Z = Y_u Φ^*`, `M × K`.
    pub z: Mat<C64>,
    /// `‖Y‖_F²`.
    pub y_energy: f64,
    /// `L = ∏ l_i`.
    pub len: usize,
}

impl Problem {
    pub fn new(p: &PreambleSet, y: &ComplexTensor) -> Result<Self, VbiError> {
        let dims = p.dims();
        if y.order() != dims.len() + 1 || y.dims()[..dims.len()] != dims[..] {
            return Err(VbiError::Dimension(format!(
                "received tensor dims {:?} do not extend preamble dims {:?}",
                y.dims(),
                dims
            )));
        }
        let phi = crate::signal::assemble_preamble_matrix(p);
        let yu = unfold_last(y);
        let z = &yu * phi.conjugate();
        Ok(Self {
            gram: precompute_gram(p),
            z,
            y_energy: y.frobenius_norm_sq(),
            len: p.len(),
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.z.nrows()
    }

    pub fn num_devices(&self) -> usize {
        self.z.ncols()
    }
}

/// `⊙_i (A_i^H A_i)^*`, the Gram matrix `Φ^T Φ^*` of the Khatri-Rao product.
pub fn precompute_gram(p: &PreambleSet) -> Mat<C64> {
    let grams: Vec<Mat<C64>> = p
        .factors()
        .factors()
        .iter()
        .map(|a| a.transpose() * a.conjugate())
        .collect();
    hadamard(&grams).expect("all factor Grams are K x K")
}

/// All variational statistics.
#[derive(Debug, Clone)]
pub struct PosteriorState {
    pub m_x: Mat<C64>,
    pub c_x: Mat<C64>,
    pub a_v: Vec<f64>,
    pub b_v: f64,
    pub o_mu: Vec<f64>,
    pub t_mu: Vec<f64>,
    pub e_mu_inv: Vec<f64>,
    pub e_mu_inv2: Vec<f64>,
    pub a_beta: f64,
    pub b_beta: f64,
    pub eps: f64,
    pub iter: usize,
}

impl PosteriorState {
    pub fn e_beta(&self) -> f64 {
        self.b_beta / self.a_beta
    }

    pub fn e_v(&self, k: usize) -> f64 {
        self.b_v / self.a_v[k]
    }

    pub fn num_antennas(&self) -> usize {
        self.m_x.nrows()
    }

    pub fn num_devices(&self) -> usize {
        self.m_x.ncols()
    }
}

/// Matched-filter start: `M_X = Z / L`, `C_X = I`, `E[v] = 1`, zero prior
/// means, and `E[β] = L M / ‖Y‖²`.
pub fn init_posterior(problem: &Problem, cfg: &EngineConfig) -> PosteriorState {
    let (m, k) = (problem.num_antennas(), problem.num_devices());
    let eps = cfg.eps;
    let b_v = m as f64 + eps;
    let lm = (problem.len * m) as f64;
    let b_beta = lm + eps;
    let scale = C64::new(1.0 / problem.len as f64, 0.0);
    PosteriorState {
        m_x: Mat::from_fn(m, k, |i, j| problem.z[(i, j)] * scale),
        c_x: Mat::identity(k, k),
        a_v: vec![b_v; k],
        b_v,
        o_mu: vec![m as f64; k],
        t_mu: vec![-eps; k],
        e_mu_inv: vec![0.0; k],
        e_mu_inv2: vec![0.0; k],
        a_beta: b_beta * problem.y_energy / lm + eps,
        b_beta,
        eps,
        iter: 0,
    }
}

fn all_finite(m: &Mat<C64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

/// `C_X = (E[β] G + diag(E[v]))^{-1}`,
/// `M_X = (E[β] Z + 1 [E[μ_k^{-1}] E[v_k]]) C_X`.
pub fn update_qx(s: &mut PosteriorState, problem: &Problem) -> Result<(), VbiError> {
    let (m, k) = (s.num_antennas(), s.num_devices());
    let beta = s.e_beta();
    let ev: Vec<f64> = (0..k).map(|j| s.e_v(j)).collect();
    let mut prec = Mat::from_fn(k, k, |i, j| problem.gram[(i, j)] * beta);
    for j in 0..k {
        prec[(j, j)] += ev[j];
    }
    if !all_finite(&prec) {
        return Err(VbiError::NonFinite { iter: s.iter, what: "precision matrix" });
    }
    let llt = prec
        .llt(Side::Lower)
        .map_err(|_| VbiError::NotPositiveDefinite { iter: s.iter })?;
    let c_x = llt.inverse();
    let rhs = Mat::from_fn(m, k, |i, j| problem.z[(i, j)] * beta + s.e_mu_inv[j] * ev[j]);
    let m_x = &rhs * &c_x;
    if !all_finite(&m_x) || !all_finite(&c_x) {
        return Err(VbiError::NonFinite { iter: s.iter, what: "q(X) moments" });
    }
    s.m_x = m_x;
    s.c_x = c_x;
    Ok(())
}

/// `Re Σ_m M_X(m, k)`.
fn column_sum_re(m_x: &Mat<C64>, k: usize) -> f64 {
    (0..m_x.nrows()).map(|i| m_x[(i, k)].re).sum()
}

/// `o_k = M E[v_k]`, `t_k = 2 Re(Σ_m M_X(m,k)) E[v_k] - ε`, then the two
/// inverse moments of `q(μ_k)`. `m_x` is the iterate to read.
pub fn update_qmu(s: &mut PosteriorState, m_x: &Mat<C64>) -> Result<(), VbiError> {
    let m = s.num_antennas() as f64;
    for k in 0..s.num_devices() {
        let ev = s.e_v(k);
        let o = m * ev;
        let t = 2.0 * column_sum_re(m_x, k) * ev - s.eps;
        let (e1, e2) = posterior_mu_moments(o, t, s.eps)?;
        if !(e1.is_finite() && e2.is_finite()) {
            return Err(VbiError::NonFinite { iter: s.iter, what: "q(mu) moments" });
        }
        s.o_mu[k] = o;
        s.t_mu[k] = t;
        s.e_mu_inv[k] = e1;
        s.e_mu_inv2[k] = e2;
    }
    Ok(())
}

/// `a_v[k] = ‖M_X(:,k)‖² + M C_X(k,k) - 2 E[μ⁻¹] Re Σ_m M_X(m,k) + M E[μ⁻²] + ε`.
pub fn update_qv(s: &mut PosteriorState, m_x: &Mat<C64>, c_x: &Mat<C64>) -> Result<(), VbiError> {
    let m = s.num_antennas();
    let mf = m as f64;
    for k in 0..s.num_devices() {
        let energy: f64 = (0..m).map(|i| m_x[(i, k)].norm_sqr()).sum();
        let a = energy + mf * c_x[(k, k)].re - 2.0 * s.e_mu_inv[k] * column_sum_re(m_x, k)
            + mf * s.e_mu_inv2[k]
            + s.eps;
        if !(a > 0.0) || !a.is_finite() {
            return Err(VbiError::NonPositiveShape { iter: s.iter, device: k, value: a });
        }
        s.a_v[k] = a;
    }
    Ok(())
}

/// Expected residual
/// `F = Tr(G (M_X^H M_X + M C_X)) - 2 Re Σ M_X ∘ conj(Z) + ‖Y‖²`.
pub fn expected_residual(s: &PosteriorState, problem: &Problem) -> f64 {
    let (m, k) = (s.num_antennas(), s.num_devices());
    let g = &problem.gram;
    let w = &s.m_x * g;
    let mut quad = 0.0;
    let mut cross = 0.0;
    for j in 0..k {
        for i in 0..m {
            quad += (w[(i, j)] * s.m_x[(i, j)].conj()).re;
            cross += (s.m_x[(i, j)] * problem.z[(i, j)].conj()).re;
        }
    }
    let mut trace_gc = 0.0;
    for j in 0..k {
        for i in 0..k {
            trace_gc += (g[(i, j)] * s.c_x[(j, i)]).re;
        }
    }
    quad + m as f64 * trace_gc - 2.0 * cross + problem.y_energy
}

/// `a_β = F + ε`. Rounding may push `F` slightly below zero; anything
/// beyond `-1e-8` relative to `‖Y‖²` is an error.
pub fn update_qbeta(s: &mut PosteriorState, problem: &Problem) -> Result<f64, VbiError> {
    let f = expected_residual(s, problem);
    if !f.is_finite() {
        return Err(VbiError::NonFinite { iter: s.iter, what: "expected residual" });
    }
    if f < -1e-8 * problem.y_energy.max(1.0) {
        return Err(VbiError::NegativeResidual { iter: s.iter, value: f });
    }
    s.a_beta = f.max(0.0) + s.eps;
    Ok(f)
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub residual: f64,
    pub max_column_energy: f64,
    pub rel_change: f64,
}

#[derive(Debug, Clone)]
pub struct EngineOutput {
    pub state: PosteriorState,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

fn frob_sq(m: &Mat<C64>) -> f64 {
    m.squared_norm_l2()
}

fn max_column_energy(m: &Mat<C64>) -> f64 {
    (0..m.ncols())
        .map(|k| (0..m.nrows()).map(|i| m[(i, k)].norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn run(problem: &Problem, cfg: &EngineConfig) -> Result<EngineOutput, VbiError> {
    run_observed(problem, cfg, |_| {})
}

/// Runs the engine, calling `observe` with the state after every sweep.
pub fn run_observed<F: FnMut(&PosteriorState)>(
    problem: &Problem,
    cfg: &EngineConfig,
    mut observe: F,
) -> Result<EngineOutput, VbiError> {
    cfg.validate()?;
    let mut s = init_posterior(problem, cfg);
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut converged = false;
    while s.iter < cfg.max_iters {
        s.iter += 1;
        let prev_m = s.m_x.clone();
        let prev_c = s.c_x.clone();
        update_qx(&mut s, problem)?;
        match cfg.schedule {
            UpdateSchedule::Listing => {
                update_qmu(&mut s, &prev_m)?;
                update_qv(&mut s, &prev_m, &prev_c)?;
            }
            UpdateSchedule::Sequential => {
                let (m_x, c_x) = (s.m_x.clone(), s.c_x.clone());
                update_qmu(&mut s, &m_x)?;
                update_qv(&mut s, &m_x, &c_x)?;
            }
        }
        let residual = update_qbeta(&mut s, problem)?;
        let diff = frob_sq(&(&s.m_x - &prev_m)).sqrt();
        let base = frob_sq(&prev_m).sqrt();
        let rel_change = if base > 0.0 {
            diff / base
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        trace.push(TraceRow {
            iter: s.iter,
            residual,
            max_column_energy: max_column_energy(&s.m_x),
            rel_change,
        });
        observe(&s);
        if rel_change < cfg.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(EngineOutput {
        iterations: s.iter,
        converged,
        state: s,
        trace,
    })
}

/// `E[S^H S] = M_S^H M_S + Σ_i C_{i,i}` for a matrix-variate Gaussian whose
/// rows `i` have covariance blocks `C_{i,i}`.
pub fn gaussian_gram_moment(m_s: &Mat<C64>, c_blocks: &[Mat<C64>]) -> Result<Mat<C64>, VbiError> {
    let k = m_s.ncols();
    if c_blocks.len() != m_s.nrows() {
        return Err(VbiError::Dimension(format!(
            "{} covariance blocks for {} rows",
            c_blocks.len(),
            m_s.nrows()
        )));
    }
    let mut out = m_s.adjoint() * m_s;
    for c in c_blocks {
        if c.nrows() != k || c.ncols() != k {
            return Err(VbiError::Dimension(format!(
                "block is {}x{}, expected {k}x{k}",
                c.nrows(),
                c.ncols()
            )));
        }
        out += c;
    }
    Ok(out)
}

/// Above this `z = t²/(4o)` with `t < 0` the closed form cancels badly and
/// the continued fraction takes over.
const CF_SWITCH_Z: f64 = 4.0;

/// `Γ(s/2) 1F1(s/2; 1/2; z) + sgn(t) 2√z Γ((s+1)/2) 1F1((s+1)/2; 3/2; z)`,
/// proportional to `∫ u^{s-1} exp(-o u² + t u) du` (analytically continued).
fn moment_kernel(s: f64, t_over_sqrt_o: f64, z: f64) -> Result<SignedLogValue, SpecialFnError> {
    let even = ln_gamma_signed(0.5 * s)? * hyp1f1(0.5 * s, 0.5, z)?;
    if t_over_sqrt_o == 0.0 {
        return Ok(even);
    }
    let odd = SignedLogValue::from_f64(t_over_sqrt_o)
        * ln_gamma_signed(0.5 * (s + 1.0))?
        * hyp1f1(0.5 * (s + 1.0), 1.5, z)?;
    Ok(even + odd)
}

/// `J(s+1)/J(s)` for `J(s) = ∫ w^{s-1} exp(-w² - c w) dw`, `c >= 0`,
/// from the backward recurrence `r(s) = s / (c + 2 r(s+1))`.
fn cf_ratio(s: f64, c: f64) -> f64 {
    let eval = |depth: usize| {
        let top = s + depth as f64;
        let mut r = (-c + (c * c + 8.0 * top).sqrt()) / 4.0;
        for j in (0..depth).rev() {
            r = (s + j as f64) / (c + 2.0 * r);
        }
        r
    };
    let mut depth = 32;
    let mut prev = eval(depth);
    while depth < 1 << 16 {
        depth *= 2;
        let next = eval(depth);
        if (next - prev).abs() <= 1e-15 * next.abs() {
            return next;
        }
        prev = next;
    }
    prev
}

/// `(E[μ⁻¹], E[μ⁻²])` under `q(μ) ∝ exp(-o μ⁻² + t μ⁻¹ + (ε-1) ln μ)`.
///
/// In `u = μ⁻¹` these are `J(1-ε)/J(-ε)` and `J(2-ε)/J(-ε)` with
/// `J(s) = ∫ u^{s-1} e^{-o u² + t u} du`, which gives the Gamma / `1F1`
/// ratio forms evaluated here in signed-log arithmetic.
pub fn posterior_mu_moments(o: f64, t: f64, eps: f64) -> Result<(f64, f64), SpecialFnError> {
    if !(o > 0.0) || !o.is_finite() || !t.is_finite() {
        return Err(SpecialFnError::Domain(if o > 0.0 { t } else { o }));
    }
    let z = t * t / (4.0 * o);
    if t < 0.0 && z > CF_SWITCH_Z {
        let c = -t / o.sqrt();
        let r0 = cf_ratio(-eps, c);
        let r1 = cf_ratio(1.0 - eps, c);
        return Ok((r0 / o.sqrt(), r0 * r1 / o));
    }
    let ratio = t / o.sqrt();
    let den = moment_kernel(-eps, ratio, z)?;
    let n1 = moment_kernel(1.0 - eps, ratio, z)?;
    let n2 = moment_kernel(2.0 - eps, ratio, z)?;
    let e1 = (n1 / den).scale_ln(-0.5 * o.ln());
    let e2 = (n2 / den).scale_ln(-o.ln());
    Ok((e1.to_f64(), e2.to_f64()))
}
