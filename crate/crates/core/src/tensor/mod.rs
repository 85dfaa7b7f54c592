//! Dense and sparse tensors, unfoldings, mode products and error
//! measurement.
//!
//! Conventions used throughout:
//!
//! * Dense values are stored with the **first mode varying fastest** (the
//!   mode-0 unfolding of a dense tensor is a plain reshape).
//! * The mode-`j` unfolding maps tensor entry `(i_0, ..., i_{d-1})` to row
//!   `i_j` and column `sum_{k != j} i_k * prod_{m < k, m != j} I_m`, i.e.
//!   lower-numbered modes vary fastest among the column modes. Under this
//!   convention a multilinear product unfolds to
//!   `A_j X_(j) (A_{d-1} ⊗ ... ⊗ A_{j+1} ⊗ A_{j-1} ⊗ ... ⊗ A_0)^T`.
//! * Mode indices are 0-based in the API.

mod dense;
mod sparse;

pub use dense::DenseTensor;
pub use sparse::{SparseMat, SparseTensor};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tucker::TuckerTensor;

/// Largest element count for which dense materialization (reconstruction,
/// densification of sparse tensors) is permitted: 2^27 doubles = 1 GiB.
pub const DENSIFY_CAP: usize = 1 << 27;

/// Either storage flavor of a tensor; decompositions accept both.
///
/// Equality is bit-exact and storage-aware: a dense tensor never equals a
/// sparse one, even with identical entries.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Dense(DenseTensor),
    Sparse(SparseTensor),
}

impl From<DenseTensor> for Tensor {
    fn from(t: DenseTensor) -> Self {
        Tensor::Dense(t)
    }
}

impl From<SparseTensor> for Tensor {
    fn from(t: SparseTensor) -> Self {
        Tensor::Sparse(t)
    }
}

/// Checks that a shape is usable: at least one mode, every dimension
/// positive, and the total element count representable in a `usize`.
pub fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::invalid("tensor shape must have at least one mode"));
    }
    let mut total: usize = 1;
    for (j, &dim) in shape.iter().enumerate() {
        if dim == 0 {
            return Err(Error::invalid(format!("mode {j} has zero dimension")));
        }
        total = total.checked_mul(dim).ok_or_else(|| {
            Error::invalid(format!(
                "shape {shape:?} has more elements than a usize can address"
            ))
        })?;
    }
    Ok(())
}

pub(crate) fn check_mode(shape: &[usize], mode: usize) -> Result<()> {
    if mode >= shape.len() {
        return Err(Error::invalid(format!(
            "mode {mode} out of range for order-{} tensor",
            shape.len()
        )));
    }
    Ok(())
}

/// `(left, dim, right)` split of a shape around `mode`: `left` is the
/// product of lower-mode dimensions (fast index), `right` of higher ones.
pub(crate) fn split_at_mode(shape: &[usize], mode: usize) -> (usize, usize, usize) {
    let left: usize = shape[..mode].iter().product();
    let right: usize = shape[mode + 1..].iter().product();
    (left, shape[mode], right)
}

impl Tensor {
    pub fn shape(&self) -> &[usize] {
        match self {
            Tensor::Dense(t) => t.shape(),
            Tensor::Sparse(t) => t.shape(),
        }
    }

    pub fn order(&self) -> usize {
        self.shape().len()
    }

    /// Number of stored values: the element count for dense tensors, the
    /// number of explicit entries for sparse ones.
    pub fn nnz(&self) -> usize {
        match self {
            Tensor::Dense(t) => t.len(),
            Tensor::Sparse(t) => t.nnz(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Tensor::Sparse(_))
    }

    pub fn frob_norm_sq(&self) -> f64 {
        match self {
            Tensor::Dense(t) => t.frob_norm_sq(),
            Tensor::Sparse(t) => t.frob_norm_sq(),
        }
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    /// Mode product `M ·_mode X`: contracts `M` (sized `K x I_mode`) against
    /// the mode-`mode` fibers. The result is always dense.
    pub fn mode_product(&self, m: &Matrix, mode: usize) -> Result<DenseTensor> {
        match self {
            Tensor::Dense(t) => t.mode_product(m, mode),
            Tensor::Sparse(t) => t.mode_product(m, mode),
        }
    }

    /// Keeps only the given indices (in the given order) along `mode`,
    /// preserving the storage flavor.
    pub fn select_mode(&self, mode: usize, indices: &[usize]) -> Result<Tensor> {
        Ok(match self {
            Tensor::Dense(t) => Tensor::Dense(t.select_mode(mode, indices)?),
            Tensor::Sparse(t) => Tensor::Sparse(t.select_mode(mode, indices)?),
        })
    }

    /// Dense copy; errors beyond [`DENSIFY_CAP`].
    pub fn to_dense(&self) -> Result<DenseTensor> {
        match self {
            Tensor::Dense(t) => Ok(t.clone()),
            Tensor::Sparse(t) => t.to_dense(),
        }
    }
}

/// Applies several mode products `(mode, matrix)` to `x`. Modes must be
/// distinct; products are applied in ascending mode order, which fixes the
/// floating-point evaluation order.
pub fn multi_mode_product(x: &Tensor, factors: &[(usize, &Matrix)]) -> Result<DenseTensor> {
    let d = x.order();
    let mut seen = vec![false; d];
    for &(mode, m) in factors {
        check_mode(x.shape(), mode)?;
        if seen[mode] {
            return Err(Error::invalid(format!("mode {mode} given twice")));
        }
        seen[mode] = true;
        if m.cols() != x.shape()[mode] {
            return Err(Error::invalid(format!(
                "factor for mode {mode} has {} columns, expected {}",
                m.cols(),
                x.shape()[mode]
            )));
        }
    }
    let mut ordered: Vec<&(usize, &Matrix)> = factors.iter().collect();
    ordered.sort_by_key(|(mode, _)| *mode);
    let mut iter = ordered.into_iter();
    let mut acc = match iter.next() {
        Some(&(mode, m)) => x.mode_product(m, mode)?,
        None => return x.to_dense(),
    };
    for &(mode, m) in iter {
        acc = acc.mode_product(m, mode)?;
    }
    Ok(acc)
}

/// Expands a Tucker representation back to a dense tensor.
pub fn reconstruct(t: &TuckerTensor) -> Result<DenseTensor> {
    let mut acc: Option<DenseTensor> = None;
    for (mode, factor) in t.factors.iter().enumerate() {
        acc = Some(match acc {
            None => t.core.mode_product(factor, mode)?,
            Some(prev) => prev.mode_product(factor, mode)?,
        });
    }
    match acc {
        Some(t) => Ok(t),
        None => t.core.to_dense(),
    }
}

/// Relative Frobenius error `‖x - reconstruct(t)‖_F / ‖x‖_F`.
///
/// Dense inputs are compared against the reconstruction directly (streaming
/// over panels when the tensor exceeds [`DENSIFY_CAP`]); sparse inputs are
/// measured algebraically without densifying `x`:
/// `‖x - Ĝ ×_j A_j‖² = ‖x‖² - 2⟨x ×_j A_j^T, Ĝ⟩ + ⟨Ĝ ×_j A_j^T A_j, Ĝ⟩`.
pub fn relative_error(x: &Tensor, t: &TuckerTensor) -> Result<f64> {
    check_compatible(x, t)?;
    let norm_sq = x.frob_norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::invalid("relative error of a zero tensor"));
    }
    match x {
        Tensor::Dense(xd) => {
            if xd.len() <= DENSIFY_CAP {
                let rec = reconstruct(t)?;
                let mut err_sq = 0.0;
                for (a, b) in xd.values().iter().zip(rec.values()) {
                    let dlt = a - b;
                    err_sq += dlt * dlt;
                }
                Ok((err_sq / norm_sq).sqrt())
            } else {
                let err_sq = dense::streamed_error_sq(xd, t)?;
                Ok((err_sq / norm_sq).sqrt())
            }
        }
        Tensor::Sparse(xs) => {
            let core = t.core.to_dense()?;
            let transposed: Vec<Matrix> = t.factors.iter().map(|f| f.transpose()).collect();
            let pairs: Vec<(usize, &Matrix)> =
                transposed.iter().enumerate().map(|(j, m)| (j, m)).collect();
            let projected = multi_mode_product(&Tensor::Sparse(xs.clone()), &pairs)?;
            let cross = crate::matrix::dot(projected.values(), core.values());
            // ‖reconstruction‖² via the small Gram matrices of the factors.
            let grams: Vec<Matrix> = t.factors.iter().map(|f| f.gram()).collect();
            let gpairs: Vec<(usize, &Matrix)> =
                grams.iter().enumerate().map(|(j, m)| (j, m)).collect();
            let weighted = multi_mode_product(&Tensor::Dense(core.clone()), &gpairs)?;
            let rec_sq = crate::matrix::dot(weighted.values(), core.values());
            let err_sq = (norm_sq - 2.0 * cross + rec_sq).max(0.0);
            Ok((err_sq / norm_sq).sqrt())
        }
    }
}

/// Fast-path error for orthonormal-factor decompositions:
/// `sqrt(max(0, ‖x‖² - ‖core‖²)) / ‖x‖`. Only valid when every factor has
/// orthonormal columns (HOSVD/STHOSVD families).
pub fn relative_error_via_core(x: &Tensor, t: &TuckerTensor) -> Result<f64> {
    check_compatible(x, t)?;
    let norm_sq = x.frob_norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::invalid("relative error of a zero tensor"));
    }
    let core_sq = t.core.frob_norm_sq();
    Ok(((norm_sq - core_sq).max(0.0) / norm_sq).sqrt())
}

fn check_compatible(x: &Tensor, t: &TuckerTensor) -> Result<()> {
    if t.factors.len() != x.order() {
        return Err(Error::invalid(format!(
            "decomposition has {} factors but tensor has order {}",
            t.factors.len(),
            x.order()
        )));
    }
    for (mode, f) in t.factors.iter().enumerate() {
        if f.rows() != x.shape()[mode] || f.cols() != t.core.shape()[mode] {
            return Err(Error::invalid(format!(
                "factor {mode} is {}x{}, expected {}x{}",
                f.rows(),
                f.cols(),
                x.shape()[mode],
                t.core.shape()[mode]
            )));
        }
    }
    Ok(())
}
