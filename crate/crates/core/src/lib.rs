//! Grant-free random access over LEO satellite links: tensor-structured
//! preambles, a mean-field variational Bayesian receiver for joint activity
//! detection and channel estimation, the physical channel simulator that
//! feeds it, and a seeded Monte-Carlo sweep harness.
//!
//! Module map:
//!
//! * [`tensor`] – Kronecker / Khatri-Rao / Hadamard products, Kruskal
//!   reconstruction and the mode-(d+1) unfolding (one index convention).
//! * [`special`] – signed log-Gamma, `1F1`, Bessel `J_1`/`J_3`.
//! * [`channel`] – link budget, rain fading, antenna pattern, Rician channels.
//! * [`signal`] – preamble factors and received-signal synthesis.
//! * [`vbi`] – the variational Bayesian receiver.
//! * [`detection`] – activity threshold, CSI extraction, `Pe` and NMSE.
//! * [`baselines`] – SOMP and a soft-threshold AMP reference.
//! * [`harness`] – scenario config, sweeps, aggregation and CSV output.

pub mod baselines;
pub mod channel;
pub mod detection;
pub mod harness;
pub mod random;
pub mod signal;
pub mod special;
pub mod tensor;
pub mod vbi;

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;

pub use faer::Mat;
