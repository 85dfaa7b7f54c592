//! The orthonormal-factor Tucker algorithms: HOSVD, STHOSVD, their
//! randomized counterparts, and the tolerance-driven adaptive variants.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sketch::{adapt_range_finder_abs, DenseUnfoldingOp, SketchStream, SparseUnfoldingOp};
use crate::tensor::{multi_mode_product, DenseTensor, Tensor};

use super::factor::{mode_stream, sketch_factor, svd_factor};
use super::{check_ranks, resolve_order, Method, TuckerConfig, TuckerMeta, TuckerTensor};

/// Core tensor `x ×_1 A_1^T … ×_d A_d^T` for orthonormal factors.
fn orthonormal_core(x: &Tensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let transposed: Vec<Matrix> = factors.iter().map(Matrix::transpose).collect();
    let pairs: Vec<(usize, &Matrix)> = transposed.iter().enumerate().collect();
    multi_mode_product(x, &pairs)
}

/// Product of all dimensions except `mode` — the column count of the
/// mode-`mode` unfolding.
fn other_dims_product(shape: &[usize], mode: usize) -> usize {
    shape
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != mode)
        .map(|(_, &v)| v)
        .product()
}

/// Higher-order SVD: every mode factor comes from the original tensor's
/// mode Gram matrix; modes are independent of one another.
pub fn hosvd(x: &Tensor, config: &TuckerConfig) -> Result<TuckerTensor> {
    let shape = x.shape().to_vec();
    check_ranks(&shape, &config.ranks)?;
    let d = shape.len();
    let mut factors = Vec::with_capacity(d);
    let mut achieved = Vec::with_capacity(d);
    for j in 0..d {
        let r = config.ranks[j].min(shape[j]);
        let (a, _) = svd_factor(x, j, r)?;
        factors.push(a);
        achieved.push(r);
    }
    let core = orthonormal_core(x, &factors)?;
    Ok(TuckerTensor {
        core: Tensor::Dense(core),
        factors,
        meta: TuckerMeta {
            method: Method::Hosvd,
            shape,
            ranks: achieved,
            order: (0..d).collect(),
            oversample: 0,
            power_iters: 0,
            seed: config.seed,
            tolerance: None,
            selections: None,
        },
    })
}

/// Sequentially truncated HOSVD: each processed mode immediately shrinks
/// the working core, so later modes factor a smaller tensor.
pub fn sthosvd(x: &Tensor, config: &TuckerConfig) -> Result<TuckerTensor> {
    let shape = x.shape().to_vec();
    check_ranks(&shape, &config.ranks)?;
    let order = resolve_order(&shape, &config.order, false)?;
    let d = shape.len();
    let mut factors: Vec<Option<Matrix>> = (0..d).map(|_| None).collect();
    let mut achieved = vec![0usize; d];
    let mut core: Option<Tensor> = None;
    for &j in &order {
        let src = core.as_ref().unwrap_or(x);
        let r = config.ranks[j].min(shape[j]);
        let (a, _) = svd_factor(src, j, r)?;
        core = Some(Tensor::Dense(src.mode_product(&a.transpose(), j)?));
        factors[j] = Some(a);
        achieved[j] = r;
    }
    Ok(TuckerTensor {
        core: core.expect("at least one mode"),
        factors: factors.into_iter().map(|f| f.expect("all modes processed")).collect(),
        meta: TuckerMeta {
            method: Method::Sthosvd,
            shape,
            ranks: achieved,
            order,
            oversample: 0,
            power_iters: 0,
            seed: config.seed,
            tolerance: None,
            selections: None,
        },
    })
}

/// Randomized HOSVD: each mode factor comes from an `r_j + p` column
/// Gaussian sketch of the original unfolding. Sketch sizes are clamped to
/// `min(I_j, prod_{i != j} I_i)` and the truncation rank to the clamped
/// sketch size, so oversized requests degrade gracefully.
pub fn r_hosvd(x: &Tensor, config: &TuckerConfig) -> Result<TuckerTensor> {
    let shape = x.shape().to_vec();
    check_ranks(&shape, &config.ranks)?;
    let d = shape.len();
    let mut factors = Vec::with_capacity(d);
    let mut achieved = Vec::with_capacity(d);
    for j in 0..d {
        let ell = (config.ranks[j] + config.oversample)
            .min(shape[j])
            .min(other_dims_product(&shape, j));
        let r = config.ranks[j].min(ell);
        let mut stream = mode_stream(config.seed, j);
        let a = sketch_factor(x, j, r, ell, config.power_iters, &mut stream)?;
        factors.push(a);
        achieved.push(r);
    }
    let core = orthonormal_core(x, &factors)?;
    Ok(TuckerTensor {
        core: Tensor::Dense(core),
        factors,
        meta: TuckerMeta {
            method: Method::RHosvd,
            shape,
            ranks: achieved,
            order: (0..d).collect(),
            oversample: config.oversample,
            power_iters: config.power_iters,
            seed: config.seed,
            tolerance: None,
            selections: None,
        },
    })
}

/// Randomized STHOSVD: like [`sthosvd`] but with sketched factors; the
/// sketch of each step sees the already-shrunk core, which is what makes
/// this the cheapest of the fixed-rank methods.
pub fn r_sthosvd(x: &Tensor, config: &TuckerConfig) -> Result<TuckerTensor> {
    let shape = x.shape().to_vec();
    check_ranks(&shape, &config.ranks)?;
    let order = resolve_order(&shape, &config.order, true)?;
    let d = shape.len();
    let mut cur_shape = shape.clone();
    let mut factors: Vec<Option<Matrix>> = (0..d).map(|_| None).collect();
    let mut achieved = vec![0usize; d];
    let mut core: Option<Tensor> = None;
    for &j in &order {
        let src = core.as_ref().unwrap_or(x);
        let ell = (config.ranks[j] + config.oversample)
            .min(cur_shape[j])
            .min(other_dims_product(&cur_shape, j));
        let r = config.ranks[j].min(ell);
        let mut stream = mode_stream(config.seed, j);
        let a = sketch_factor(src, j, r, ell, config.power_iters, &mut stream)?;
        core = Some(Tensor::Dense(src.mode_product(&a.transpose(), j)?));
        cur_shape[j] = r;
        factors[j] = Some(a);
        achieved[j] = r;
    }
    Ok(TuckerTensor {
        core: core.expect("at least one mode"),
        factors: factors.into_iter().map(|f| f.expect("all modes processed")).collect(),
        meta: TuckerMeta {
            method: Method::RSthosvd,
            shape,
            ranks: achieved,
            order,
            oversample: config.oversample,
            power_iters: config.power_iters,
            seed: config.seed,
            tolerance: None,
            selections: None,
        },
    })
}

fn require_tolerance(config: &TuckerConfig) -> Result<f64> {
    let eps = config
        .tolerance
        .ok_or_else(|| Error::invalid("adaptive methods require a tolerance"))?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!(
            "tolerance must lie in (0, 1), got {eps}"
        )));
    }
    Ok(eps)
}

/// Per-mode tolerance split: uniform `eps/sqrt(d)` unless explicit per-mode
/// values are supplied, in which case they must satisfy
/// `sum eps_j^2 = eps^2` (to 1e-12 relative). A zero entry means the mode is
/// left uncompressed.
fn resolve_mode_tolerances(config: &TuckerConfig, d: usize, eps: f64) -> Result<Vec<f64>> {
    match &config.mode_tolerances {
        None => Ok(vec![eps / (d as f64).sqrt(); d]),
        Some(v) => {
            if v.len() != d {
                return Err(Error::invalid(format!(
                    "{} per-mode tolerances for {d} modes",
                    v.len()
                )));
            }
            if v.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
                return Err(Error::invalid("per-mode tolerances must be finite and >= 0"));
            }
            let sum_sq: f64 = v.iter().map(|e| e * e).sum();
            if (sum_sq - eps * eps).abs() > 1e-12 * eps * eps {
                return Err(Error::invalid(format!(
                    "per-mode tolerances must satisfy sum eps_j^2 = eps^2 \
                     (got {sum_sq:e}, expected {:e})",
                    eps * eps
                )));
            }
            Ok(v.clone())
        }
    }
}

/// Adaptive range-finder basis for one mode of `x`, stopping at absolute
/// residual `tol_abs`.
fn range_basis(
    x: &Tensor,
    mode: usize,
    tol_abs: f64,
    block: usize,
    stream: &mut SketchStream,
) -> Result<Matrix> {
    match x {
        Tensor::Dense(t) => {
            adapt_range_finder_abs(&DenseUnfoldingOp::new(t, mode)?, tol_abs, block, stream)
        }
        Tensor::Sparse(t) => {
            adapt_range_finder_abs(&SparseUnfoldingOp::new(t, mode)?, tol_abs, block, stream)
        }
    }
}

/// Adaptive R-HOSVD: each mode's rank is chosen by the adaptive range
/// finder so that its residual is at most `eps_j * ||x||_F` (with
/// `eps_j = eps/sqrt(d)` by default); the combined relative error is then
/// at most `eps`.
pub fn adaptive_r_hosvd(x: &Tensor, config: &TuckerConfig) -> Result<TuckerTensor> {
    let eps = require_tolerance(config)?;
    let shape = x.shape().to_vec();
    let d = shape.len();
    let mode_eps = resolve_mode_tolerances(config, d, eps)?;
    let norm = x.frob_norm();
    let mut factors = Vec::with_capacity(d);
    let mut achieved = Vec::with_capacity(d);
    for j in 0..d {
        let a = if mode_eps[j] == 0.0 {
            Matrix::identity(shape[j])
        } else {
            let mut stream = mode_stream(config.seed, j);
            range_basis(x, j, mode_eps[j] * norm, config.block, &mut stream)?
        };
        achieved.push(a.cols());
        factors.push(a);
    }
    let core = orthonormal_core(x, &factors)?;
    Ok(TuckerTensor {
        core: Tensor::Dense(core),
        factors,
        meta: TuckerMeta {
            method: Method::AdaptiveRHosvd,
            shape,
            ranks: achieved,
            order: (0..d).collect(),
            oversample: 0,
            power_iters: 0,
            seed: config.seed,
            tolerance: Some(eps),
            selections: None,
        },
    })
}

/// Adaptive R-STHOSVD: sequential version of [`adaptive_r_hosvd`]. Each
/// step's residual threshold is measured against the norm of the *original*
/// tensor, so the per-step errors telescope to at most `eps * ||x||_F`.
pub fn adaptive_r_sthosvd(x: &Tensor, config: &TuckerConfig) -> Result<TuckerTensor> {
    let eps = require_tolerance(config)?;
    let shape = x.shape().to_vec();
    let d = shape.len();
    let mode_eps = resolve_mode_tolerances(config, d, eps)?;
    let order = resolve_order(&shape, &config.order, true)?;
    let norm = x.frob_norm();
    let mut factors: Vec<Option<Matrix>> = (0..d).map(|_| None).collect();
    let mut achieved = vec![0usize; d];
    let mut core: Option<Tensor> = None;
    for &j in &order {
        let src = core.as_ref().unwrap_or(x);
        let a = if mode_eps[j] == 0.0 {
            Matrix::identity(shape[j])
        } else {
            let mut stream = mode_stream(config.seed, j);
            range_basis(src, j, mode_eps[j] * norm, config.block, &mut stream)?
        };
        core = Some(Tensor::Dense(src.mode_product(&a.transpose(), j)?));
        achieved[j] = a.cols();
        factors[j] = Some(a);
    }
    Ok(TuckerTensor {
        core: core.expect("at least one mode"),
        factors: factors.into_iter().map(|f| f.expect("all modes processed")).collect(),
        meta: TuckerMeta {
            method: Method::AdaptiveRSthosvd,
            shape,
            ranks: achieved,
            order,
            oversample: 0,
            power_iters: 0,
            seed: config.seed,
            tolerance: Some(eps),
            selections: None,
        },
    })
}
