//! Shared factor-extraction routines for the Tucker algorithms.
//!
//! Two routes produce an orthonormal mode factor:
//!
//! * the deterministic route computes the leading left singular vectors of
//!   the mode unfolding — for dense tensors through a streamed QR of the
//!   transposed unfolding followed by an SVD of the small triangular factor
//!   (numerically equivalent to an SVD of the unfolding itself), and for
//!   sparse tensors through the mode Gram matrix, whose accumulation costs
//!   only `nnz · I_j`;
//! * the randomized route sketches the unfolding with `l` Gaussian columns,
//!   orthonormalizes the sketch, and rotates the captured basis onto the
//!   leading singular directions through the small `l x l` projected Gram
//!   matrix `(Q^T X)(Q^T X)^T`.
//!
//! Dense tensors are streamed (the unfolding is never materialized and
//! neither is the Gaussian test matrix); sparse tensors go through the
//! matrix-free operators, materializing only `l`-column blocks.

use crate::error::Result;
use crate::kernels::{eigh, thin_qr, thin_svd};
use crate::matrix::Matrix;
use crate::sketch::{LinearOperator, SketchStream, SparseUnfoldingOp};
use crate::tensor::Tensor;

/// Mode Gram matrix `X_(mode) X_(mode)^T` for either storage flavor.
pub(crate) fn mode_gram(x: &Tensor, mode: usize) -> Matrix {
    match x {
        Tensor::Dense(t) => t.mode_gram(mode),
        Tensor::Sparse(t) => t.mode_gram(mode),
    }
}

/// Deterministic factor: the leading `rank` left singular vectors of the
/// mode unfolding. Also returns the full singular-value list (descending),
/// which callers can reuse for tail-energy bookkeeping.
pub(super) fn svd_factor(x: &Tensor, mode: usize, rank: usize) -> Result<(Matrix, Vec<f64>)> {
    match x {
        Tensor::Dense(t) => {
            // X_(j)^T = Q R  =>  X_(j) = R^T Q^T, so the left singular
            // vectors of the unfolding are those of the small R^T.
            let r = t.unfold_r(mode);
            let svd = thin_svd(&r.transpose())?;
            Ok((svd.u.first_cols(rank), svd.s))
        }
        Tensor::Sparse(t) => {
            let (evals, evecs) = eigh(&t.mode_gram(mode))?;
            let svals = evals.iter().map(|&l| l.max(0.0).sqrt()).collect();
            Ok((evecs.first_cols(rank), svals))
        }
    }
}

/// Orthonormal sketch basis `Q` (`I_mode x ell`) for the mode unfolding,
/// optionally refined by `power_iters` rounds of subspace iteration.
pub(super) fn sketch_basis(
    x: &Tensor,
    mode: usize,
    ell: usize,
    power_iters: usize,
    stream: &mut SketchStream,
) -> Result<Matrix> {
    match x {
        // Fast path: generate test-matrix rows on the fly while streaming
        // the tensor once, so nothing of size `N x ell` is ever held.
        Tensor::Dense(t) if power_iters == 0 => {
            let mut sampler = stream.row_sampler(ell);
            let y = t.unfold_apply_rows(mode, ell, |row| sampler.fill_row(row));
            Ok(thin_qr(&y)?.0)
        }
        Tensor::Dense(t) => {
            let op = crate::sketch::DenseUnfoldingOp::new(t, mode)?;
            basis_via_operator(&op, ell, power_iters, stream)
        }
        Tensor::Sparse(t) => {
            let op = SparseUnfoldingOp::new(t, mode)?;
            basis_via_operator(&op, ell, power_iters, stream)
        }
    }
}

fn basis_via_operator(
    op: &dyn LinearOperator,
    ell: usize,
    power_iters: usize,
    stream: &mut SketchStream,
) -> Result<Matrix> {
    let omega = stream.gaussian_block(op.cols(), ell);
    let (mut q, _) = thin_qr(&op.apply(&omega))?;
    for _ in 0..power_iters {
        let (z, _) = thin_qr(&op.apply_transpose(&q))?;
        let (qn, _) = thin_qr(&op.apply(&z))?;
        q = qn;
    }
    Ok(q)
}

/// Randomized factor: sketch basis rotated onto the leading `rank` singular
/// directions of the unfolding (`A = Q * U_rank` where `U` diagonalizes the
/// projected Gram matrix).
pub(super) fn sketch_factor(
    x: &Tensor,
    mode: usize,
    rank: usize,
    ell: usize,
    power_iters: usize,
    stream: &mut SketchStream,
) -> Result<Matrix> {
    let q = sketch_basis(x, mode, ell, power_iters, stream)?;
    let projected = match x {
        Tensor::Dense(t) => t.project_gram(mode, &q),
        Tensor::Sparse(t) => SparseUnfoldingOp::new(t, mode)?.apply_transpose(&q).gram(),
    };
    let (_, evecs) = eigh(&projected)?;
    Ok(q.matmul(&evecs.first_cols(rank)))
}

/// Per-mode sketch stream derived from the master seed: each mode draws
/// from its own stream so mode factors are independent of the order in
/// which other modes are processed.
pub(super) fn mode_stream(seed: u64, mode: usize) -> SketchStream {
    SketchStream::new(seed, mode as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseTensor;

    fn test_tensor() -> Tensor {
        Tensor::Dense(
            DenseTensor::from_fn(&[6, 5, 4], |idx| {
                1.0 / (idx[0] + idx[1] + idx[2] + 1) as f64
            })
            .unwrap(),
        )
    }

    #[test]
    fn svd_factor_matches_unfolding_singular_vectors() {
        let x = test_tensor();
        let dense = x.to_dense().unwrap();
        // The dense (streamed QR) and sparse (Gram) routes must both agree
        // with an explicit SVD of the materialized unfolding.
        let mut entries = Vec::new();
        for i in 0..6 {
            for j in 0..5 {
                for k in 0..4 {
                    entries.push((vec![i, j, k], dense.get(&[i, j, k])));
                }
            }
        }
        let sparse = Tensor::Sparse(
            crate::tensor::SparseTensor::new(&[6, 5, 4], entries).unwrap(),
        );
        for flavor in [&x, &sparse] {
            for mode in 0..3 {
                let (a, svals) = svd_factor(flavor, mode, 3).unwrap();
                assert!(a.orthonormality_defect() < 1e-9);
                let svd =
                    crate::kernels::thin_svd(&dense.unfold(mode).unwrap().transpose()).unwrap();
                for i in 0..3 {
                    assert!(
                        (svals[i] - svd.s[i]).abs() < 1e-9,
                        "singular value {i} mismatch"
                    );
                    // Columns agree up to sign.
                    let dot: f64 = (0..a.rows())
                        .map(|r| a.get(r, i) * svd.v.get(r, i))
                        .sum();
                    assert!(dot.abs() > 1.0 - 1e-7, "direction {i}: |dot| = {}", dot.abs());
                }
            }
        }
    }

    #[test]
    fn sketch_factor_captures_dominant_subspace() {
        let x = test_tensor();
        let mut stream = mode_stream(17, 0);
        let a = sketch_factor(&x, 0, 3, 6, 0, &mut stream).unwrap();
        assert_eq!((a.rows(), a.cols()), (6, 3));
        assert!(a.orthonormality_defect() < 1e-10);
        // Compare against the optimal rank-3 residual of the unfolding: the
        // sketched projection may lose only a modest factor on the tail.
        let dense = x.to_dense().unwrap();
        let unfolded = dense.unfold(0).unwrap();
        let residual = unfolded
            .sub(&a.matmul(&a.t_matmul(&unfolded)))
            .frob_norm_sq()
            .sqrt();
        let svd = crate::kernels::thin_svd(&unfolded.transpose()).unwrap();
        let optimal = svd.s[3..].iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!(
            residual <= 3.0 * optimal,
            "residual {residual} vs optimal {optimal}"
        );
    }

    #[test]
    fn dense_and_sparse_routes_agree() {
        // A sparse tensor and its dense copy must produce the same factor
        // for the same seed (same test matrix, same arithmetic up to
        // accumulation order).
        let sparse = crate::tensor::SparseTensor::new(
            &[6, 5, 4],
            (0..40)
                .map(|k| {
                    let idx = vec![(k * 7) % 6, (k * 3) % 5, (k * 5) % 4];
                    (idx, ((k + 1) as f64).sin())
                })
                .collect(),
        )
        .unwrap();
        let xs = Tensor::Sparse(sparse.clone());
        let xd = Tensor::Dense(sparse.to_dense().unwrap());
        for mode in 0..3 {
            let a = sketch_factor(&xs, mode, 2, 4, 0, &mut mode_stream(5, mode)).unwrap();
            let b = sketch_factor(&xd, mode, 2, 4, 0, &mut mode_stream(5, mode)).unwrap();
            assert!(a.sub(&b).max_abs() < 1e-9, "mode {mode}");
        }
    }
}
