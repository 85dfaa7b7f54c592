//! Tucker decompositions: deterministic HOSVD/STHOSVD, randomized
//! counterparts, tolerance-driven adaptive variants, structure-preserving
//! (selection-based) variants, and the matching a-priori error bounds.
//!
//! All decompositions share [`TuckerConfig`] and return a [`TuckerTensor`]
//! whose metadata records what was actually done (achieved core dimensions,
//! processing order, seed, selections). Every algorithm is deterministic
//! given its inputs and seed: rerunning with the same configuration yields a
//! bit-identical result.

mod algorithms;
mod factor;
mod structured;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::eigh;
use crate::matrix::Matrix;
use crate::tensor::{check_mode, Tensor};

pub use algorithms::{
    adaptive_r_hosvd, adaptive_r_sthosvd, hosvd, r_hosvd, r_sthosvd, sthosvd,
};
pub use structured::{sp_hosvd, sp_sthosvd};

/// The decomposition algorithms exposed by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Hosvd,
    Sthosvd,
    RHosvd,
    RSthosvd,
    AdaptiveRHosvd,
    AdaptiveRSthosvd,
    SpSthosvd,
    SpHosvd,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Hosvd,
        Method::Sthosvd,
        Method::RHosvd,
        Method::RSthosvd,
        Method::AdaptiveRHosvd,
        Method::AdaptiveRSthosvd,
        Method::SpSthosvd,
        Method::SpHosvd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Hosvd => "hosvd",
            Method::Sthosvd => "sthosvd",
            Method::RHosvd => "r-hosvd",
            Method::RSthosvd => "r-sthosvd",
            Method::AdaptiveRHosvd => "adaptive-r-hosvd",
            Method::AdaptiveRSthosvd => "adaptive-r-sthosvd",
            Method::SpSthosvd => "sp-sthosvd",
            Method::SpHosvd => "sp-hosvd",
        }
    }

    /// True for the sketch-based methods (everything except plain
    /// HOSVD/STHOSVD), which prefer processing large modes first.
    pub fn is_randomized(&self) -> bool {
        !matches!(self, Method::Hosvd | Method::Sthosvd)
    }

    /// True for the tolerance-driven methods that pick ranks themselves.
    pub fn is_adaptive(&self) -> bool {
        matches!(self, Method::AdaptiveRHosvd | Method::AdaptiveRSthosvd)
    }

    /// True for the selection-based structure-preserving methods.
    pub fn is_structure_preserving(&self) -> bool {
        matches!(self, Method::SpSthosvd | Method::SpHosvd)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown method '{s}' (expected one of: {})",
                    Method::ALL.map(|m| m.name()).join(", ")
                ))
            })
    }
}

/// Mode processing order for the sequential algorithms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ModeOrder {
    /// Pick automatically: largest modes first for randomized algorithms,
    /// smallest first for the deterministic STHOSVD.
    #[default]
    Auto,
    /// An explicit permutation of `0..d` (0-based mode indices).
    Given(Vec<usize>),
}

/// Shared configuration for all decompositions. Fields that a method does
/// not use are ignored (e.g. `tolerance` for fixed-rank methods, `ranks`
/// for adaptive ones).
#[derive(Debug, Clone)]
pub struct TuckerConfig {
    /// Target multilinear rank, one entry per mode (fixed-rank methods).
    pub ranks: Vec<usize>,
    /// Oversampling parameter `p` for the sketch-based methods.
    pub oversample: usize,
    /// Subspace (power) iteration count `q` for R-HOSVD / R-STHOSVD.
    pub power_iters: usize,
    /// Processing order for the sequential methods.
    pub order: ModeOrder,
    /// Relative error tolerance `eps` for the adaptive methods.
    pub tolerance: Option<f64>,
    /// Optional per-mode tolerances; must satisfy `sum eps_j^2 = eps^2`.
    /// An entry of exactly 0 means "do not compress this mode".
    pub mode_tolerances: Option<Vec<f64>>,
    /// Block size `b` for the adaptive range finder.
    pub block: usize,
    /// Master seed; every mode sketches from its own derived stream.
    pub seed: u64,
}

impl Default for TuckerConfig {
    fn default() -> Self {
        TuckerConfig {
            ranks: Vec::new(),
            oversample: 5,
            power_iters: 0,
            order: ModeOrder::Auto,
            tolerance: None,
            mode_tolerances: None,
            block: 1,
            seed: 0,
        }
    }
}

impl TuckerConfig {
    /// Fixed-rank configuration with defaults for everything else.
    pub fn with_ranks(ranks: &[usize]) -> Self {
        TuckerConfig {
            ranks: ranks.to_vec(),
            ..TuckerConfig::default()
        }
    }

    /// Adaptive configuration targeting relative error `eps`.
    pub fn with_tolerance(eps: f64) -> Self {
        TuckerConfig {
            tolerance: Some(eps),
            ..TuckerConfig::default()
        }
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Everything needed to reproduce and audit a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuckerMeta {
    pub method: Method,
    /// Shape of the decomposed tensor.
    pub shape: Vec<usize>,
    /// Achieved core dimensions (after any clamping / adaptation).
    pub ranks: Vec<usize>,
    /// Processing order actually used (0-based; identity for the
    /// mode-independent methods).
    pub order: Vec<usize>,
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
    pub tolerance: Option<f64>,
    /// For structure-preserving methods: the kept original indices per mode
    /// (0-based), in core-axis order.
    pub selections: Option<Vec<Vec<usize>>>,
}

/// A Tucker decomposition `x ≈ core ×_1 A_1 ×_2 A_2 … ×_d A_d`.
///
/// `factors[j]` has shape `I_j × r_j`. For the orthonormal-factor methods
/// the columns of every factor are orthonormal; for the structure-preserving
/// methods they are well-conditioned but oblique, and `core` keeps original
/// tensor entries (staying sparse when the input is sparse).
#[derive(Debug, Clone)]
pub struct TuckerTensor {
    pub core: Tensor,
    pub factors: Vec<Matrix>,
    pub meta: TuckerMeta,
}

impl TuckerTensor {
    pub fn shape(&self) -> &[usize] {
        &self.meta.shape
    }

    /// Core dimensions.
    pub fn ranks(&self) -> &[usize] {
        &self.meta.ranks
    }

    /// Stored values in the core (all of them for dense cores, the explicit
    /// entries for sparse ones).
    pub fn core_nnz(&self) -> usize {
        self.core.nnz()
    }
}

/// Runs the decomposition selected by `method`.
pub fn decompose(x: &Tensor, method: Method, config: &TuckerConfig) -> Result<TuckerTensor> {
    match method {
        Method::Hosvd => hosvd(x, config),
        Method::Sthosvd => sthosvd(x, config),
        Method::RHosvd => r_hosvd(x, config),
        Method::RSthosvd => r_sthosvd(x, config),
        Method::AdaptiveRHosvd => adaptive_r_hosvd(x, config),
        Method::AdaptiveRSthosvd => adaptive_r_sthosvd(x, config),
        Method::SpSthosvd => sp_sthosvd(x, config),
        Method::SpHosvd => sp_hosvd(x, config),
    }
}

/// Processing-order heuristic: randomized algorithms sketch the largest
/// modes first (the sketch shrinks them early, making later steps cheap);
/// the deterministic STHOSVD handles the smallest modes first (cheapest
/// full decompositions early). Ties break toward the lower mode index.
pub fn auto_order(shape: &[usize], randomized: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..shape.len()).collect();
    if randomized {
        order.sort_by_key(|&j| (std::cmp::Reverse(shape[j]), j));
    } else {
        order.sort_by_key(|&j| (shape[j], j));
    }
    order
}

/// Resolves a [`ModeOrder`] against a shape, validating explicit orders.
pub(crate) fn resolve_order(
    shape: &[usize],
    order: &ModeOrder,
    randomized: bool,
) -> Result<Vec<usize>> {
    match order {
        ModeOrder::Auto => Ok(auto_order(shape, randomized)),
        ModeOrder::Given(perm) => {
            let d = shape.len();
            if perm.len() != d {
                return Err(Error::invalid(format!(
                    "processing order has {} entries, tensor has {d} modes",
                    perm.len()
                )));
            }
            let mut seen = vec![false; d];
            for &j in perm {
                if j >= d || seen[j] {
                    return Err(Error::invalid(format!(
                        "processing order {perm:?} is not a permutation of 0..{d}"
                    )));
                }
                seen[j] = true;
            }
            Ok(perm.clone())
        }
    }
}

pub(crate) fn check_ranks(shape: &[usize], ranks: &[usize]) -> Result<()> {
    if ranks.len() != shape.len() {
        return Err(Error::invalid(format!(
            "{} target ranks given, tensor has {} modes",
            ranks.len(),
            shape.len()
        )));
    }
    if let Some(j) = ranks.iter().position(|&r| r == 0) {
        return Err(Error::invalid(format!(
            "target rank for mode {j} must be at least 1"
        )));
    }
    Ok(())
}

/// Tail energy of the mode-`mode` unfolding beyond rank `rank`:
/// `Delta = sqrt(sum_{i > rank} sigma_i^2)`. This is the quantity the error
/// bounds are expressed in; it is computed from the eigenvalues of the
/// mode Gram matrix, summing the tail smallest-first for accuracy.
pub fn delta_tail(x: &Tensor, mode: usize, rank: usize) -> Result<f64> {
    check_mode(x.shape(), mode)?;
    let dim = x.shape()[mode];
    if rank == 0 || rank > dim {
        return Err(Error::invalid(format!(
            "delta_tail rank {rank} out of range 1..={dim} for mode {mode}"
        )));
    }
    let g = factor::mode_gram(x, mode);
    let (evals, _) = eigh(&g)?;
    let tail = evals[rank..]
        .iter()
        .rev()
        .fold(0.0f64, |acc, &l| acc + l.max(0.0));
    Ok(tail.sqrt())
}

/// [`delta_tail`] for every mode at once.
pub fn delta_tails(x: &Tensor, ranks: &[usize]) -> Result<Vec<f64>> {
    check_ranks(x.shape(), ranks)?;
    (0..x.order())
        .map(|j| delta_tail(x, j, ranks[j].min(x.shape()[j])))
        .collect()
}

/// `f_p(r) = sqrt(1 + r/(p-1))`: the expected range-finder loss factor for
/// rank `r` with oversampling `p`.
fn f_factor(rank: usize, oversample: usize) -> f64 {
    (1.0 + rank as f64 / (oversample as f64 - 1.0)).sqrt()
}

/// `g(I, l) = sqrt(1 + 4 l (I - l))`: the selection conditioning factor for
/// keeping `l` of `I` indices with the strong rank-revealing QR (eta = 2).
fn g_factor(dim: usize, kept: usize) -> f64 {
    (1.0 + 4.0 * kept as f64 * (dim - kept) as f64).sqrt()
}

fn check_oversample_for_bound(oversample: usize) -> Result<()> {
    if oversample < 2 {
        return Err(Error::invalid(
            "expected-error bounds require oversampling p >= 2",
        ));
    }
    Ok(())
}

/// Deterministic HOSVD/STHOSVD error bound: `sqrt(sum_j Delta_j^2)`.
pub fn bound_deterministic(deltas: &[f64]) -> f64 {
    deltas.iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// Expected-error bound shared by R-HOSVD and R-STHOSVD (and independent of
/// the processing order): `sqrt(sum_j (1 + r_j/(p-1)) Delta_j^2)`.
pub fn bound_expected_error(deltas: &[f64], ranks: &[usize], oversample: usize) -> Result<f64> {
    check_oversample_for_bound(oversample)?;
    if deltas.len() != ranks.len() {
        return Err(Error::invalid(format!(
            "{} tail terms for {} ranks",
            deltas.len(),
            ranks.len()
        )));
    }
    let sum: f64 = deltas
        .iter()
        .zip(ranks)
        .map(|(&d, &r)| {
            let f = f_factor(r, oversample);
            f * f * d * d
        })
        .sum();
    Ok(sum.sqrt())
}

/// Expected-error bound for the structure-preserving methods, evaluated in
/// the supplied processing order:
/// `sum_m (prod_{k <= m} g(I_{o_k}, l_{o_k})) * f_p(r_{o_m}) * Delta_{o_m}`
/// with `l_j = r_j + p`. Unlike the orthonormal-factor bound, this one is
/// order-dependent because the selection conditioning factors compound.
pub fn bound_sp(
    shape: &[usize],
    ranks: &[usize],
    oversample: usize,
    deltas: &[f64],
    order: &[usize],
) -> Result<f64> {
    check_oversample_for_bound(oversample)?;
    let d = shape.len();
    if ranks.len() != d || deltas.len() != d {
        return Err(Error::invalid(
            "shape, ranks and tail terms must agree in length",
        ));
    }
    let order = resolve_order(shape, &ModeOrder::Given(order.to_vec()), true)?;
    let mut prefix = 1.0;
    let mut total = 0.0;
    for &j in &order {
        let ell = ranks[j] + oversample;
        if ell >= shape[j] {
            return Err(Error::invalid(format!(
                "mode {j}: kept count {ell} must be smaller than the dimension {}",
                shape[j]
            )));
        }
        prefix *= g_factor(shape[j], ell);
        total += prefix * f_factor(ranks[j], oversample) * deltas[j];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseTensor;
    use approx::assert_relative_eq;

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
            assert_eq!(serde_json::from_str::<Method>(&json).unwrap(), m);
        }
        assert!("hovsd".parse::<Method>().is_err());
    }

    #[test]
    fn auto_order_prefers_large_modes_when_randomized() {
        assert_eq!(auto_order(&[40, 4096, 10], true), vec![1, 0, 2]);
        assert_eq!(auto_order(&[807, 613, 1922], true), vec![2, 0, 1]);
        assert_eq!(auto_order(&[40, 4096, 10], false), vec![2, 0, 1]);
        // Ties break toward the lower index: identity for cubic shapes.
        assert_eq!(auto_order(&[7, 7, 7], true), vec![0, 1, 2]);
        assert_eq!(auto_order(&[7, 7, 7], false), vec![0, 1, 2]);
    }

    #[test]
    fn explicit_orders_are_validated() {
        let shape = [3, 4, 5];
        assert!(resolve_order(&shape, &ModeOrder::Given(vec![2, 0, 1]), true).is_ok());
        assert!(resolve_order(&shape, &ModeOrder::Given(vec![0, 1]), true).is_err());
        assert!(resolve_order(&shape, &ModeOrder::Given(vec![0, 0, 1]), true).is_err());
        assert!(resolve_order(&shape, &ModeOrder::Given(vec![0, 1, 3]), true).is_err());
    }

    fn superdiagonal(values: &[f64]) -> Tensor {
        let n = values.len();
        let mut t = DenseTensor::zeros(&[n, n, n]).unwrap();
        for (i, &v) in values.iter().enumerate() {
            t.set(&[i, i, i], v);
        }
        Tensor::Dense(t)
    }

    #[test]
    fn delta_tail_on_superdiagonal() {
        // Unfoldings have orthogonal rows with norms equal to the
        // superdiagonal entries, so the tail is known exactly.
        let x = superdiagonal(&[3.0, 2.0, 1.0]);
        for mode in 0..3 {
            assert_relative_eq!(delta_tail(&x, mode, 2).unwrap(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(
                delta_tail(&x, mode, 1).unwrap(),
                (4.0f64 + 1.0).sqrt(),
                epsilon = 1e-12
            );
            assert_eq!(delta_tail(&x, mode, 3).unwrap(), 0.0);
        }
        assert!(delta_tail(&x, 0, 0).is_err());
        assert!(delta_tail(&x, 0, 4).is_err());
    }

    #[test]
    fn delta_tail_matches_svd_norm_identity() {
        let t = DenseTensor::from_fn(&[5, 6, 4], |idx| {
            ((idx[0] * 3 + idx[1]) as f64).sin() + 0.3 * idx[2] as f64
        })
        .unwrap();
        let x = Tensor::Dense(t.clone());
        for mode in 0..3 {
            let unfolded = t.unfold(mode).unwrap();
            let svd = crate::kernels::thin_svd(&unfolded.transpose()).unwrap();
            for rank in 1..=t.shape()[mode] {
                // The identity is between squared norms; comparing there
                // avoids manufacturing noise out of the cancellation in
                // ||X||^2 - head when the true tail is zero.
                let head: f64 = svd.s[..rank].iter().map(|s| s * s).sum();
                let expected_sq = (t.frob_norm_sq() - head).max(0.0);
                let got = delta_tail(&x, mode, rank).unwrap();
                assert!(
                    (got * got - expected_sq).abs() <= 1e-10 * t.frob_norm_sq(),
                    "mode {mode} rank {rank}: {got} vs {}",
                    expected_sq.sqrt()
                );
            }
        }
    }

    #[test]
    fn expected_error_bound_formula() {
        // Unit tails, uniform rank 2, p = 3: each term is 1 + 2/2 = 2.
        let b = bound_expected_error(&[1.0, 1.0, 1.0], &[2, 2, 2], 3).unwrap();
        assert_relative_eq!(b, 6.0f64.sqrt(), epsilon = 1e-14);
        assert_eq!(bound_expected_error(&[0.0, 0.0], &[3, 4], 2).unwrap(), 0.0);
        // p = r + 1 makes every factor sqrt(2).
        let deltas = [0.3, 0.1, 0.7, 0.2, 0.4];
        let b = bound_expected_error(&deltas, &[4; 5], 5).unwrap();
        assert_relative_eq!(
            b,
            2.0f64.sqrt() * bound_deterministic(&deltas),
            epsilon = 1e-12
        );
        assert!(bound_expected_error(&[1.0], &[2], 1).is_err());
    }

    #[test]
    fn sp_bound_formula() {
        // g(25, 10) = sqrt(1 + 4*10*15) = sqrt(601); f_5(5) = sqrt(9/4) = 3/2.
        let b = bound_sp(&[25], &[5], 5, &[2.0], &[0]).unwrap();
        assert_relative_eq!(b, 601.0f64.sqrt() * 1.5 * 2.0, epsilon = 1e-12);
        // Two modes: prefix products compound in processing order.
        let shape = [20, 30];
        let ranks = [3, 4];
        let deltas = [0.5, 0.25];
        let p = 2;
        let manual = |order: [usize; 2]| {
            let mut prefix = 1.0;
            let mut total = 0.0;
            for &j in &order {
                let ell = ranks[j] + p;
                prefix *= (1.0 + 4.0 * (ell * (shape[j] - ell)) as f64).sqrt();
                total += prefix * (1.0 + ranks[j] as f64 / (p as f64 - 1.0)).sqrt() * deltas[j];
            }
            total
        };
        for order in [[0usize, 1], [1, 0]] {
            let b = bound_sp(&shape, &ranks, p, &deltas, &order).unwrap();
            assert_relative_eq!(b, manual(order), epsilon = 1e-12);
        }
        // Kept count must stay below the dimension.
        assert!(bound_sp(&[6], &[5], 2, &[1.0], &[0]).is_err());
        assert!(bound_sp(&[25], &[5], 1, &[1.0], &[0]).is_err());
    }
}
