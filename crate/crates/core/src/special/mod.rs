//! Special functions needed by the posterior-moment updates and the
//! satellite antenna pattern: signed log-Gamma, Kummer's confluent
//! hypergeometric function `1F1(a; b; x)` and the Bessel functions `J_1`, `J_3`.
//!
//! Gamma and `1F1` values are returned as [`SignedLogValue`] because the
//! moment formulas combine factors like `Γ(-ε/2) ≈ -2/ε` with `1F1` values that
//! grow like `e^x`, while the final ratios are O(1).

mod dd;

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg};

use thiserror::Error;

use dd::DoubleDouble;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialFnError {
    #[error("Gamma pole at non-positive integer {0}")]
    GammaPole(f64),
    #[error("1F1 denominator parameter b = {0} is a non-positive integer")]
    HypergeometricPole(f64),
    #[error("1F1 argument x = {0} outside the supported domain x >= 0")]
    Domain(f64),
    #[error("1F1({a}, {b}, {x}) series did not converge within {terms} terms")]
    NonConvergence { a: f64, b: f64, x: f64, terms: usize },
}

/// `sign · exp(ln_abs)`, with `sign == 0` flagging an exact zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    ln_abs: f64,
    sign: i8,
}

impl SignedLogValue {
    pub const ZERO: Self = Self {
        ln_abs: f64::NEG_INFINITY,
        sign: 0,
    };
    pub const ONE: Self = Self {
        ln_abs: 0.0,
        sign: 1,
    };

    /// Builds a value from its log-magnitude and sign (`+1`, `-1`, or `0` for zero).
    pub fn new(ln_abs: f64, sign: i8) -> Self {
        if sign == 0 {
            Self::ZERO
        } else {
            Self {
                ln_abs,
                sign: sign.signum(),
            }
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self {
                ln_abs: v.abs().ln(),
                sign: if v > 0.0 { 1 } else { -1 },
            }
        }
    }

    pub fn ln_abs(self) -> f64 {
        self.ln_abs
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_abs.exp(),
        }
    }

    /// Multiplies by `exp(delta)`.
    pub fn scale_ln(self, delta: f64) -> Self {
        if self.is_zero() {
            self
        } else {
            Self {
                ln_abs: self.ln_abs + delta,
                sign: self.sign,
            }
        }
    }
}

impl Neg for SignedLogValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            ln_abs: self.ln_abs,
            sign: -self.sign,
        }
    }
}

impl Mul for SignedLogValue {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.is_zero() || o.is_zero() {
            Self::ZERO
        } else {
            Self {
                ln_abs: self.ln_abs + o.ln_abs,
                sign: self.sign * o.sign,
            }
        }
    }
}

impl Div for SignedLogValue {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        // x / 0 keeps the numerator sign with infinite magnitude
        let sign = if o.is_zero() { self.sign } else { self.sign * o.sign };
        Self {
            ln_abs: self.ln_abs - o.ln_abs,
            sign,
        }
    }
}

impl Add for SignedLogValue {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.ln_abs >= o.ln_abs {
            (self, o)
        } else {
            (o, self)
        };
        let r = (small.ln_abs - big.ln_abs).exp();
        if big.sign == small.sign {
            Self {
                ln_abs: big.ln_abs + r.ln_1p(),
                sign: big.sign,
            }
        } else if r == 1.0 {
            Self::ZERO
        } else {
            Self {
                ln_abs: big.ln_abs + (-r).ln_1p(),
                sign: big.sign,
            }
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `sin(π x)` with argument reduction, accurate near the integers.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

fn is_non_positive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    debug_assert!(x >= 0.5);
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Sign and log-magnitude of `Γ(x)`; negative arguments go through the
/// reflection formula `Γ(x) Γ(1-x) = π / sin(π x)`.
pub fn ln_gamma_signed(x: f64) -> Result<SignedLogValue, SpecialFnError> {
    if is_non_positive_integer(x) || x.is_nan() {
        return Err(SpecialFnError::GammaPole(x));
    }
    if x >= 0.5 {
        return Ok(SignedLogValue::new(ln_gamma_lanczos(x), 1));
    }
    let s = sin_pi(x);
    let ln_abs = PI.ln() - s.abs().ln() - ln_gamma_lanczos(1.0 - x);
    Ok(SignedLogValue::new(ln_abs, if s > 0.0 { 1 } else { -1 }))
}

/// Series tail tolerance relative to the running sum.
const SERIES_TOL: f64 = 1e-16;
/// Hard cap on the number of series terms.
pub const MAX_SERIES_TERMS: usize = 10_000;
/// Upper end of the region where the direct power series is used.
pub const DIRECT_SERIES_MAX_X: f64 = 25.0;
/// Upper end of the Kummer-transform region; beyond it the large-argument
/// expansion takes over.
pub const KUMMER_MAX_X: f64 = 45.0;

/// Confluent hypergeometric function `1F1(a; b; x)` for real `a`, `b` and `x >= 0`.
///
/// Branches: the Pochhammer series for `x <= 25`, Kummer's transformation
/// `1F1(a; b; x) = e^x 1F1(b-a; b; -x)` with the alternating series summed in
/// double-double for `25 < x <= 45`, and the large-argument expansion above
/// that (falling back to a rescaled direct series when it does not reach
/// full precision).
pub fn hyp1f1(a: f64, b: f64, x: f64) -> Result<SignedLogValue, SpecialFnError> {
    check_args(b, x)?;
    if x == 0.0 {
        return Ok(SignedLogValue::ONE);
    }
    if is_non_positive_integer(a) || x <= DIRECT_SERIES_MAX_X {
        return hyp1f1_series(a, b, x);
    }
    if x <= KUMMER_MAX_X {
        return hyp1f1_kummer(a, b, x);
    }
    match hyp1f1_asymptotic(a, b, x)? {
        Some(v) => Ok(v),
        None => hyp1f1_series(a, b, x),
    }
}

fn check_args(b: f64, x: f64) -> Result<(), SpecialFnError> {
    if is_non_positive_integer(b) {
        return Err(SpecialFnError::HypergeometricPole(b));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(SpecialFnError::Domain(x));
    }
    Ok(())
}

/// Direct Pochhammer series `Σ (a)_n / (b)_n x^n / n!`, rescaled on the fly
/// so arbitrarily large partial sums stay representable.
pub fn hyp1f1_series(a: f64, b: f64, x: f64) -> Result<SignedLogValue, SpecialFnError> {
    check_args(b, x)?;
    const RESCALE: f64 = 1e200;
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    let mut ln_scale = 0.0f64;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        let ratio = (a + nf) / (b + nf) * x / (nf + 1.0);
        term *= ratio;
        sum += term;
        if term == 0.0 || (term.abs() <= SERIES_TOL * sum.abs() && ratio.abs() < 1.0) {
            return Ok(SignedLogValue::from_f64(sum).scale_ln(ln_scale));
        }
        if sum.abs() > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            ln_scale += RESCALE.ln();
        }
    }
    Err(SpecialFnError::NonConvergence {
        a,
        b,
        x,
        terms: MAX_SERIES_TERMS,
    })
}

/// Kummer-transformed evaluation `e^x · 1F1(b-a; b; -x)`; the alternating
/// series is accumulated in double-double arithmetic.
pub fn hyp1f1_kummer(a: f64, b: f64, x: f64) -> Result<SignedLogValue, SpecialFnError> {
    check_args(b, x)?;
    let c = DoubleDouble::from_f64(b) - DoubleDouble::from_f64(a);
    let bd = DoubleDouble::from_f64(b);
    let neg_x = DoubleDouble::from_f64(-x);
    let mut sum = DoubleDouble::ONE;
    let mut term = DoubleDouble::ONE;
    for n in 0..MAX_SERIES_TERMS {
        let nd = DoubleDouble::from_f64(n as f64);
        term = term * (c + nd) * neg_x / ((bd + nd) * DoubleDouble::from_f64(n as f64 + 1.0));
        sum = sum + term;
        if term == DoubleDouble::ZERO
            || (term.abs().hi() <= 1e-3 * SERIES_TOL * sum.abs().hi() && n as f64 > x)
        {
            return Ok(SignedLogValue::from_f64(sum.to_f64()).scale_ln(x));
        }
    }
    Err(SpecialFnError::NonConvergence {
        a,
        b,
        x,
        terms: MAX_SERIES_TERMS,
    })
}

/// Dominant large-`x` expansion
/// `Γ(b)/Γ(a) e^x x^(a-b) Σ (b-a)_n (1-a)_n / n! x^(-n)`.
///
/// Returns `None` when the asymptotic series starts diverging before reaching
/// full precision. The subdominant `x^(-a)` contribution is below the
/// truncation error for `x > KUMMER_MAX_X` and is not included.
fn hyp1f1_asymptotic(a: f64, b: f64, x: f64) -> Result<Option<SignedLogValue>, SpecialFnError> {
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    let mut converged = false;
    for n in 0..200 {
        let nf = n as f64;
        let ratio = (b - a + nf) * (1.0 - a + nf) / ((nf + 1.0) * x);
        let next = term * ratio;
        if next.abs() > term.abs() && n > 0 {
            break;
        }
        term = next;
        sum += term;
        if term == 0.0 || term.abs() <= SERIES_TOL * sum.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Ok(None);
    }
    let gb = ln_gamma_signed(b)?;
    let ga = ln_gamma_signed(a)?;
    let scale = gb.ln_abs() - ga.ln_abs() + x + (a - b) * x.ln();
    let v = SignedLogValue::from_f64(sum).scale_ln(scale);
    Ok(Some(if gb.sign() * ga.sign() < 0 { -v } else { v }))
}

fn bessel_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32);
    for k in 1..=n {
        term /= f64::from(k);
    }
    let q = half * half;
    let mut sum = term;
    for k in 1..200u32 {
        term *= -q / (f64::from(k) * f64::from(k + n));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Hankel large-argument expansion.
fn bessel_asymptotic(n: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(n * n);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut coef = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..100u32 {
        let odd = f64::from(2 * k - 1);
        coef *= (mu - odd * odd) / (f64::from(k) * 8.0 * x);
        if coef.abs() >= last || coef == 0.0 {
            break;
        }
        last = coef.abs();
        // a_k / x^k enters P (even k) or Q (odd k) with alternating signs
        match k % 4 {
            1 => q += coef,
            2 => p -= coef,
            3 => q -= coef,
            _ => p += coef,
        }
        if coef.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * f64::from(n) + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Argument above which the Hankel expansion replaces the power series.
pub const BESSEL_SERIES_MAX_X: f64 = 12.0;

/// Bessel function of the first kind `J_n(x)` for `n <= 3` and `x >= 0`
/// (the antenna pattern needs `n = 1` and `n = 3`).
pub fn bessel_j(n: u32, x: f64) -> f64 {
    assert!(n <= 3, "bessel_j supports orders 0..=3, got {n}");
    assert!(x >= 0.0, "bessel_j requires x >= 0, got {x}");
    if x <= BESSEL_SERIES_MAX_X {
        bessel_series(n, x)
    } else {
        bessel_asymptotic(n, x)
    }
}
