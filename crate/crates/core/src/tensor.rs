//! Dense complex multilinear algebra.
//!
//! Every tensor in this crate is stored flat in one canonical order: the
//! entry `(i_1, .., i_d, m)` of a tensor with dims `(l_1, .., l_d, M)` lives at
//!
//! ```text
//! ((..((i_1 * l_2 + i_2) * l_3 + ..) * l_d + i_d) * M + m
//! ```
//!
//! i.e. the first mode varies slowest. With this order the vectorisation of
//! a rank-1 tensor `a_1 ∘ a_2 ∘ .. ∘ a_d` is exactly `a_1 ⊗ a_2 ⊗ .. ⊗ a_d`,
//! and the mode-(d+1) unfolding of `[[A_1, .., A_d, X]]` is
//! `X · (A_1 ⋄ .. ⋄ A_d)^T`.

use faer::{Mat, MatRef};
use thiserror::Error;

use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("column count mismatch: expected {expected}, found {found}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("invalid dimensions {0:?}")]
    InvalidDims(Vec<usize>),
    #[error("data length {found} does not match product of dims {expected}")]
    DataLength { expected: usize, found: usize },
    #[error("empty operand list")]
    Empty,
}

/// Dense `(d+1)`-way complex array in canonical (first-mode-slowest) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    dims: Vec<usize>,
    data: Vec<C64>,
}

impl ComplexTensor {
    pub fn new(dims: Vec<usize>, data: Vec<C64>) -> Result<Self, TensorError> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(TensorError::InvalidDims(dims));
        }
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(TensorError::DataLength {
                expected,
                found: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self, TensorError> {
        let n = dims.iter().product();
        Self::new(dims, vec![C64::new(0.0, 0.0); n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    /// Size of the last mode (the antenna count for received-signal tensors).
    pub fn last_dim(&self) -> usize {
        *self.dims.last().expect("dims are non-empty")
    }

    /// Product of all but the last mode.
    pub fn lead_len(&self) -> usize {
        self.data.len() / self.last_dim()
    }

    /// Canonical linear index of a multi-index; `None` when out of range.
    pub fn linear_index(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.dims.len() {
            return None;
        }
        let mut lin = 0;
        for (&i, &d) in index.iter().zip(&self.dims) {
            if i >= d {
                return None;
            }
            lin = lin * d + i;
        }
        Some(lin)
    }

    pub fn get(&self, index: &[usize]) -> Option<C64> {
        self.linear_index(index).map(|i| self.data[i])
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Inverse of [`unfold_last`]: rebuilds a tensor with leading dims `lead`
    /// from an `M × ∏lead` unfolding.
    pub fn fold_last(unfolded: MatRef<'_, C64>, lead: &[usize]) -> Result<Self, TensorError> {
        let lead_len: usize = lead.iter().product();
        if unfolded.ncols() != lead_len {
            return Err(TensorError::ShapeMismatch {
                expected: (unfolded.nrows(), lead_len),
                found: (unfolded.nrows(), unfolded.ncols()),
            });
        }
        let m = unfolded.nrows();
        let mut data = Vec::with_capacity(m * lead_len);
        for j in 0..lead_len {
            for r in 0..m {
                data.push(unfolded[(r, j)]);
            }
        }
        let mut dims = lead.to_vec();
        dims.push(m);
        Self::new(dims, data)
    }
}

/// Known preamble factors `A_1 .. A_d`, each `l_i × K`.
#[derive(Debug, Clone)]
pub struct FactorMatrices {
    factors: Vec<Mat<C64>>,
}

impl FactorMatrices {
    pub fn new(factors: Vec<Mat<C64>>) -> Result<Self, TensorError> {
        if factors.len() < 2 {
            return Err(TensorError::InvalidDims(
                factors.iter().map(|a| a.nrows()).collect(),
            ));
        }
        let k = factors[0].ncols();
        for a in &factors {
            if a.ncols() != k {
                return Err(TensorError::ColumnMismatch {
                    expected: k,
                    found: a.ncols(),
                });
            }
            if a.nrows() == 0 {
                return Err(TensorError::InvalidDims(
                    factors.iter().map(|a| a.nrows()).collect(),
                ));
            }
        }
        Ok(Self { factors })
    }

    /// Tensor order `d` (number of preamble factors).
    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn num_columns(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn factor(&self, i: usize) -> &Mat<C64> {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[Mat<C64>] {
        &self.factors
    }

    /// `(l_1, .., l_d)`.
    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|a| a.nrows()).collect()
    }

    /// `L = ∏ l_i`.
    pub fn total_len(&self) -> usize {
        self.factors.iter().map(|a| a.nrows()).product()
    }

    /// Applies the same column permutation to every factor:
    /// column `k` of the result is column `perm[k]` of the input.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        let factors = self
            .factors
            .iter()
            .map(|a| Mat::from_fn(a.nrows(), perm.len(), |i, k| a[(i, perm[k])]))
            .collect();
        Self { factors }
    }
}

/// `M × K` device state matrix; column `k` is zero whenever device `k` is silent.
#[derive(Debug, Clone)]
pub struct DeviceStateMatrix(Mat<C64>);

impl DeviceStateMatrix {
    pub fn new(x: Mat<C64>) -> Self {
        Self(x)
    }

    pub fn zeros(antennas: usize, devices: usize) -> Self {
        Self(Mat::zeros(antennas, devices))
    }

    pub fn as_mat(&self) -> &Mat<C64> {
        &self.0
    }

    pub fn into_inner(self) -> Mat<C64> {
        self.0
    }

    pub fn num_antennas(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_devices(&self) -> usize {
        self.0.ncols()
    }
}

/// Kronecker product of two vectors: `out[i*q + j] = a[i] * b[j]`.
pub fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &ai in a {
        out.extend(b.iter().map(|&bj| ai * bj));
    }
    out
}

fn column(a: &Mat<C64>, k: usize) -> Vec<C64> {
    (0..a.nrows()).map(|i| a[(i, k)]).collect()
}

/// Kronecker fold of the `k`-th columns of `mats`, first matrix slowest.
pub fn kron_columns(mats: &[Mat<C64>], k: usize) -> Vec<C64> {
    let mut acc = vec![C64::new(1.0, 0.0)];
    for a in mats {
        acc = kron(&acc, &column(a, k));
    }
    acc
}

/// Column-wise Kronecker product `A_1 ⋄ A_2 ⋄ .. ⋄ A_n`, shape `(∏ l_i) × K`.
pub fn khatri_rao(mats: &[Mat<C64>]) -> Result<Mat<C64>, TensorError> {
    let first = mats.first().ok_or(TensorError::Empty)?;
    let k = first.ncols();
    if let Some(bad) = mats.iter().find(|a| a.ncols() != k) {
        return Err(TensorError::ColumnMismatch {
            expected: k,
            found: bad.ncols(),
        });
    }
    let rows: usize = mats.iter().map(|a| a.nrows()).product();
    let mut out = Mat::<C64>::zeros(rows, k);
    for c in 0..k {
        for (r, v) in kron_columns(mats, c).into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    Ok(out)
}

/// Entrywise product of equally shaped matrices, applied in list order.
pub fn hadamard(mats: &[Mat<C64>]) -> Result<Mat<C64>, TensorError> {
    let first = mats.first().ok_or(TensorError::Empty)?;
    let shape = (first.nrows(), first.ncols());
    for a in &mats[1..] {
        if (a.nrows(), a.ncols()) != shape {
            return Err(TensorError::ShapeMismatch {
                expected: shape,
                found: (a.nrows(), a.ncols()),
            });
        }
    }
    let mut out = first.clone();
    for a in &mats[1..] {
        for j in 0..shape.1 {
            for i in 0..shape.0 {
                out[(i, j)] *= a[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Kruskal reconstruction `Σ_k a_{1,k} ∘ .. ∘ a_{d,k} ∘ x_k` with dims
/// `(l_1, .., l_d, M)`.
pub fn kruskal(
    factors: &FactorMatrices,
    x: &DeviceStateMatrix,
) -> Result<ComplexTensor, TensorError> {
    let k = factors.num_columns();
    if x.num_devices() != k {
        return Err(TensorError::ColumnMismatch {
            expected: k,
            found: x.num_devices(),
        });
    }
    let m = x.num_antennas();
    let mut dims = factors.dims();
    dims.push(m);
    let mut out = ComplexTensor::zeros(dims)?;
    let xm = x.as_mat();
    let data = out.data_mut();
    for c in 0..k {
        let xc = column(xm, c);
        if xc.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            continue;
        }
        // rank-1 term in canonical order is a_{1,c} ⊗ .. ⊗ a_{d,c} ⊗ x_c
        let a = kron_columns(factors.factors(), c);
        for (j, &aj) in a.iter().enumerate() {
            let row = &mut data[j * m..(j + 1) * m];
            for (dst, &xv) in row.iter_mut().zip(&xc) {
                *dst += aj * xv;
            }
        }
    }
    Ok(out)
}

/// Mode-(d+1) unfolding: `out[(m, j)]` is the entry with last index `m` and
/// leading canonical multi-index `j`.
pub fn unfold_last(t: &ComplexTensor) -> Mat<C64> {
    let m = t.last_dim();
    let lead = t.lead_len();
    let data = t.data();
    Mat::from_fn(m, lead, |r, j| data[j * m + r])
}
