//! Structure-preserving Tucker decompositions.
//!
//! Instead of rotating each mode onto a singular basis, these algorithms
//! *select* `l_j = r_j + p` original indices per mode (via a strong
//! rank-revealing QR of the sketched basis) and use the oblique factor
//! `A_j = Q_j (P_j^T Q_j)^{-1}`. The core is built purely by index
//! selection, so every core entry is an entry of the input tensor —
//! sparsity, integrality and nonnegativity survive, and sparse inputs keep
//! sparse cores throughout.

use crate::error::{Error, Result};
use crate::kernels::{oblique_factor, srrqr_select};
use crate::matrix::Matrix;
use crate::tensor::Tensor;

use super::factor::{mode_stream, sketch_basis};
use super::{check_ranks, resolve_order, Method, TuckerConfig, TuckerMeta, TuckerTensor};

/// Strong-RRQR conditioning parameter; the theory behind the selection
/// bound `||(P^T Q)^{-1}||_2 <= sqrt(1 + eta^2 l (I - l))` is instantiated
/// with eta = 2.
const SRRQR_ETA: f64 = 2.0;

/// Validates the strict structural precondition
/// `r_j + p < min(I_j, prod_{i != j} I_i)` and returns the kept counts
/// `l_j = r_j + p`.
fn checked_kept_counts(shape: &[usize], ranks: &[usize], oversample: usize) -> Result<Vec<usize>> {
    check_ranks(shape, ranks)?;
    let mut kept = Vec::with_capacity(shape.len());
    for (j, (&dim, &r)) in shape.iter().zip(ranks).enumerate() {
        let other: usize = shape
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &v)| v)
            .product();
        let ell = r + oversample;
        if ell >= dim.min(other) {
            return Err(Error::invalid(format!(
                "mode {j}: rank {r} + oversampling {oversample} must be strictly below \
                 min({dim}, {other})"
            )));
        }
        kept.push(ell);
    }
    Ok(kept)
}

/// One selection step: sketch the mode, orthonormalize, pick `ell`
/// well-conditioned rows, and return the oblique factor plus the selection.
fn select_mode_factor(
    src: &Tensor,
    mode: usize,
    ell: usize,
    seed: u64,
) -> Result<(Matrix, Vec<usize>)> {
    let mut stream = mode_stream(seed, mode);
    let q = sketch_basis(src, mode, ell, 0, &mut stream)?;
    let sel = srrqr_select(&q, ell, SRRQR_ETA)?;
    let a = oblique_factor(&q, &sel)?;
    Ok((a, sel.indices))
}

/// Structure-preserving STHOSVD: modes are processed sequentially and each
/// step replaces the working core by an index selection of it, so the final
/// core is a subtensor-like selection of the input (kept dimensions
/// `l_j = r_j + p`; no truncation back to `r_j`).
pub fn sp_sthosvd(x: &Tensor, config: &TuckerConfig) -> Result<TuckerTensor> {
    let shape = x.shape().to_vec();
    let kept = checked_kept_counts(&shape, &config.ranks, config.oversample)?;
    let order = resolve_order(&shape, &config.order, true)?;
    let d = shape.len();
    let mut factors: Vec<Option<Matrix>> = (0..d).map(|_| None).collect();
    let mut selections = vec![Vec::new(); d];
    let mut core: Option<Tensor> = None;
    for &j in &order {
        let src = core.as_ref().unwrap_or(x);
        let (a, indices) = select_mode_factor(src, j, kept[j], config.seed)?;
        core = Some(src.select_mode(j, &indices)?);
        factors[j] = Some(a);
        selections[j] = indices;
    }
    Ok(TuckerTensor {
        core: core.expect("at least one mode"),
        factors: factors.into_iter().map(|f| f.expect("all modes processed")).collect(),
        meta: TuckerMeta {
            method: Method::SpSthosvd,
            shape,
            ranks: kept,
            order,
            oversample: config.oversample,
            power_iters: 0,
            seed: config.seed,
            tolerance: None,
            selections: Some(selections),
        },
    })
}

/// Structure-preserving HOSVD: every mode's basis and selection come from
/// the *original* tensor independently; the core is the input restricted to
/// the Cartesian product of the per-mode selections.
pub fn sp_hosvd(x: &Tensor, config: &TuckerConfig) -> Result<TuckerTensor> {
    let shape = x.shape().to_vec();
    let kept = checked_kept_counts(&shape, &config.ranks, config.oversample)?;
    let d = shape.len();
    let mut factors = Vec::with_capacity(d);
    let mut selections = Vec::with_capacity(d);
    for j in 0..d {
        let (a, indices) = select_mode_factor(x, j, kept[j], config.seed)?;
        factors.push(a);
        selections.push(indices);
    }
    let mut core: Option<Tensor> = None;
    for (j, indices) in selections.iter().enumerate() {
        let src = core.as_ref().unwrap_or(x);
        core = Some(src.select_mode(j, indices)?);
    }
    Ok(TuckerTensor {
        core: core.expect("at least one mode"),
        factors,
        meta: TuckerMeta {
            method: Method::SpHosvd,
            shape,
            ranks: kept,
            order: (0..d).collect(),
            oversample: config.oversample,
            power_iters: 0,
            seed: config.seed,
            tolerance: None,
            selections: Some(selections),
        },
    })
}
