//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

pub mod quadrature;

use leo_jadce::random::{complex_gaussian, stream};
use leo_jadce::{Mat, C64};

pub fn random_mat(rows: usize, cols: usize, seed: &[u64]) -> Mat<C64> {
    let mut rng = stream(seed);
    Mat::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng, 1.0))
}

pub fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut d = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            d = d.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    d
}

/// Plain triple loop product, independent of the library's matmul.
pub fn naive_matmul(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    assert_eq!(a.ncols(), b.nrows());
    Mat::from_fn(a.nrows(), b.ncols(), |i, j| {
        (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
    })
}

/// Direct Pochhammer series of `1F1(a; b; x)` with a fixed number of terms.
pub fn hyp1f1_direct(a: f64, b: f64, x: f64, terms: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..terms {
        let n = n as f64;
        term *= (a + n) / (b + n) * x / (n + 1.0);
        sum += term;
    }
    sum
}

/// Ascending series `J_n(x) = Σ (-1)^k (x/2)^{2k+n} / (k! (k+n)!)`.
pub fn bessel_series(n: u32, x: f64, terms: usize) -> f64 {
    let half = 0.5 * x;
    let mut fact_n = 1.0;
    for i in 1..=n {
        fact_n *= i as f64;
    }
    let mut term = half.powi(n as i32) / fact_n;
    let mut sum = term;
    for k in 1..terms {
        let k = k as f64;
        term *= -half * half / (k * (k + n as f64));
        sum += term;
    }
    sum
}
