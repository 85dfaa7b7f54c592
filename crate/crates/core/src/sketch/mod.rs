//! Randomized sketching: reproducible Gaussian test matrices, linear
//! operators over matrices and tensor unfoldings, the randomized SVD and an
//! adaptive (tolerance-driven) range finder.
//!
//! Reproducibility contract: the `j`-th column of the conceptual Gaussian
//! test matrix of a [`SketchStream`] depends only on `(seed, stream, j)`.
//! Drawing eight columns at once therefore produces exactly the same numbers
//! as drawing two blocks of four, and the same columns can be generated
//! row-by-row when a full test matrix would be too large to hold.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{eigh, thin_qr, thin_svd, SvdResult};
use crate::matrix::Matrix;
use crate::tensor::{check_mode, DenseTensor, SparseTensor};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn column_seed(seed: u64, stream: u64, col: u64) -> u64 {
    let s = splitmix64(seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F));
    splitmix64(s ^ col.wrapping_mul(0xE703_7ED1_A0B4_28DB))
}

/// A deterministic stream of standard-normal test-matrix columns.
///
/// `stream` separates independent uses of the same master seed (one stream
/// per tensor mode, for instance); `cursor` advances as columns are consumed.
#[derive(Debug, Clone)]
pub struct SketchStream {
    seed: u64,
    stream: u64,
    cursor: u64,
}

impl SketchStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        SketchStream {
            seed,
            stream,
            cursor: 0,
        }
    }

    fn column_rng(&self, col: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(column_seed(self.seed, self.stream, col))
    }

    /// Draws the next `cols` columns as a dense `rows x cols` matrix.
    pub fn gaussian_block(&mut self, rows: usize, cols: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for j in 0..cols {
            let mut rng = self.column_rng(self.cursor + j as u64);
            for v in m.col_mut(j) {
                *v = rng.sample(StandardNormal);
            }
        }
        self.cursor += cols as u64;
        m
    }

    /// Consumes the next `cols` columns as a row-by-row sampler, for uses
    /// where the full test matrix would be too large to materialize.
    pub fn row_sampler(&mut self, cols: usize) -> RowSampler {
        let rngs = (0..cols)
            .map(|j| self.column_rng(self.cursor + j as u64))
            .collect();
        self.cursor += cols as u64;
        RowSampler { rngs }
    }
}

/// Row-wise view of a block of Gaussian columns: each call to
/// [`RowSampler::fill_row`] yields the next row across all columns.
pub struct RowSampler {
    rngs: Vec<ChaCha8Rng>,
}

impl RowSampler {
    pub fn width(&self) -> usize {
        self.rngs.len()
    }

    pub fn fill_row(&mut self, out: &mut [f64]) {
        assert_eq!(out.len(), self.rngs.len(), "row buffer width mismatch");
        for (v, rng) in out.iter_mut().zip(self.rngs.iter_mut()) {
            *v = rng.sample(StandardNormal);
        }
    }
}

/// A real linear map `A: R^cols -> R^rows` presented through matrix-block
/// products, so that sketching never needs `A` in explicit form.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `A * M` for `M` of shape `cols x k`.
    fn apply(&self, m: &Matrix) -> Matrix;
    /// `A^T * M` for `M` of shape `rows x k`.
    fn apply_transpose(&self, m: &Matrix) -> Matrix;
    fn frob_norm_sq(&self) -> f64;
    /// `||A - Q (Q^T A)||_F^2` for `Q` of shape `rows x k`, computed by
    /// explicit columnwise subtraction. Implementations must not fall back
    /// to `||A||^2 - ||Q^T A||^2`: near convergence that difference is pure
    /// cancellation and loses all accuracy below `eps * ||A||_F^2`, which is
    /// exactly where this method is consulted.
    fn residual_norm_sq(&self, q: &Matrix) -> f64;
    /// `(Q^T A)(Q^T A)^T` for `Q` of shape `rows x k`: the `k x k` Gram
    /// matrix of the projected operator, whose eigenvalues are the squared
    /// singular values of `Q^T A`. Must be computable without materializing
    /// `Q^T A` when `cols` is large.
    fn projected_gram(&self, q: &Matrix) -> Matrix;
}

/// An explicit matrix as a [`LinearOperator`].
pub struct MatrixOp<'a> {
    a: &'a Matrix,
}

impl<'a> MatrixOp<'a> {
    pub fn new(a: &'a Matrix) -> Self {
        MatrixOp { a }
    }
}

impl LinearOperator for MatrixOp<'_> {
    fn rows(&self) -> usize {
        self.a.rows()
    }

    fn cols(&self) -> usize {
        self.a.cols()
    }

    fn apply(&self, m: &Matrix) -> Matrix {
        self.a.matmul(m)
    }

    fn apply_transpose(&self, m: &Matrix) -> Matrix {
        self.a.t_matmul(m)
    }

    fn frob_norm_sq(&self) -> f64 {
        self.a.frob_norm_sq()
    }

    fn residual_norm_sq(&self, q: &Matrix) -> f64 {
        if q.cols() == 0 {
            return self.a.frob_norm_sq();
        }
        let bt = self.a.t_matmul(q);
        self.a.sub(&q.matmul_t(&bt)).frob_norm_sq()
    }

    fn projected_gram(&self, q: &Matrix) -> Matrix {
        self.a.t_matmul(q).gram()
    }
}

/// The mode-`mode` unfolding of a dense tensor, applied without ever
/// materializing the unfolding.
pub struct DenseUnfoldingOp<'a> {
    t: &'a DenseTensor,
    mode: usize,
}

impl<'a> DenseUnfoldingOp<'a> {
    pub fn new(t: &'a DenseTensor, mode: usize) -> Result<Self> {
        check_mode(t.shape(), mode)?;
        Ok(DenseUnfoldingOp { t, mode })
    }
}

impl LinearOperator for DenseUnfoldingOp<'_> {
    fn rows(&self) -> usize {
        self.t.shape()[self.mode]
    }

    fn cols(&self) -> usize {
        self.t.len() / self.t.shape()[self.mode]
    }

    fn apply(&self, m: &Matrix) -> Matrix {
        self.t.unfold_apply(self.mode, m)
    }

    fn apply_transpose(&self, m: &Matrix) -> Matrix {
        self.t.unfold_t_apply(self.mode, m)
    }

    fn frob_norm_sq(&self) -> f64 {
        self.t.frob_norm_sq()
    }

    fn residual_norm_sq(&self, q: &Matrix) -> f64 {
        self.t.unfold_residual_sq(self.mode, q)
    }

    fn projected_gram(&self, q: &Matrix) -> Matrix {
        self.t.project_gram(self.mode, q)
    }
}

/// The mode-`mode` unfolding of a sparse tensor.
pub struct SparseUnfoldingOp<'a> {
    t: &'a SparseTensor,
    mode: usize,
}

impl<'a> SparseUnfoldingOp<'a> {
    pub fn new(t: &'a SparseTensor, mode: usize) -> Result<Self> {
        check_mode(t.shape(), mode)?;
        Ok(SparseUnfoldingOp { t, mode })
    }
}

impl LinearOperator for SparseUnfoldingOp<'_> {
    fn rows(&self) -> usize {
        self.t.shape()[self.mode]
    }

    fn cols(&self) -> usize {
        self.t
            .shape()
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != self.mode)
            .map(|(_, &d)| d)
            .product()
    }

    fn apply(&self, m: &Matrix) -> Matrix {
        let dim = self.rows();
        let k = m.cols();
        let mut y = Matrix::zeros(dim, k);
        for e in 0..self.t.nnz() {
            let row = self.t.index(e)[self.mode];
            let col = self.t.unfold_col(e, self.mode);
            let v = self.t.value(e);
            for kk in 0..k {
                let cur = y.get(row, kk) + v * m.get(col, kk);
                y.set(row, kk, cur);
            }
        }
        y
    }

    fn apply_transpose(&self, m: &Matrix) -> Matrix {
        let k = m.cols();
        let mut z = Matrix::zeros(self.cols(), k);
        for e in 0..self.t.nnz() {
            let row = self.t.index(e)[self.mode];
            let col = self.t.unfold_col(e, self.mode);
            let v = self.t.value(e);
            for kk in 0..k {
                let cur = z.get(col, kk) + v * m.get(row, kk);
                z.set(col, kk, cur);
            }
        }
        z
    }

    fn frob_norm_sq(&self) -> f64 {
        self.t.frob_norm_sq()
    }

    fn residual_norm_sq(&self, q: &Matrix) -> f64 {
        self.t.unfold_residual_sq(self.mode, q)
    }

    fn projected_gram(&self, q: &Matrix) -> Matrix {
        self.t.project_gram(self.mode, q)
    }
}

/// Randomized truncated SVD with oversampling and optional power iterations.
///
/// Sketches `A` with `r + p` Gaussian columns drawn from `stream`, captures
/// the range with a thin QR, optionally refines it with `power_iters` rounds
/// of `A A^T` (re-orthonormalizing after every half-step), then recovers the
/// leading `r` triplets from the small projected matrix `Q^T A`.
pub fn randsvd(
    op: &dyn LinearOperator,
    rank: usize,
    oversample: usize,
    power_iters: usize,
    stream: &mut SketchStream,
) -> Result<SvdResult> {
    let (m, n) = (op.rows(), op.cols());
    let sketch = rank + oversample;
    if rank == 0 {
        return Err(Error::invalid("randsvd rank must be at least 1"));
    }
    if sketch > m.min(n) {
        return Err(Error::invalid(format!(
            "sketch size {sketch} (rank {rank} + oversampling {oversample}) exceeds \
             min({m}, {n}); reduce the rank or oversampling"
        )));
    }
    let omega = stream.gaussian_block(n, sketch);
    let y = op.apply(&omega);
    let (mut q, _) = thin_qr(&y)?;
    for _ in 0..power_iters {
        let (z, _) = thin_qr(&op.apply_transpose(&q))?;
        let (qn, _) = thin_qr(&op.apply(&z))?;
        q = qn;
    }
    // B = Q^T A, computed as (A^T Q)^T; svd(B^T) = V * S * U^T.
    let bt = op.apply_transpose(&q);
    let svd = thin_svd(&bt)?;
    let u = q.matmul(&svd.v.first_cols(rank));
    let v = svd.u.first_cols(rank);
    let s = svd.s[..rank].to_vec();
    Ok(SvdResult { u, s, v })
}

/// Grows an orthonormal basis `Q` in blocks of `block` Gaussian sketches
/// until `||A - Q Q^T A||_F <= tol * ||A||_F` (or the basis exhausts
/// `min(rows, cols)` columns), then trims it to the smallest leading set of
/// projected singular directions that still meets the target. Returns `Q`;
/// always at least one column.
///
/// During growth the residual is tracked through the identity
/// `||A - Q Q^T A||_F^2 = ||A||_F^2 - ||Q^T A||_F^2`, which costs one
/// transposed application per accepted block instead of a full residual.
/// The subtraction carries roundoff that scales with
/// `eps * ||A||_F^2`, so for targets near that floor the tracked value is
/// uninformative in either direction; there the per-column sketch
/// remainders (unbiased residual estimates) cue the stop, and every stop is
/// confirmed against an explicitly computed residual
/// ([`LinearOperator::residual_norm_sq`]), growing further whenever the
/// cue proves premature. Convergence claims are therefore honest down to
/// the entrywise rounding floor.
pub fn adapt_range_finder(
    op: &dyn LinearOperator,
    tol: f64,
    block: usize,
    stream: &mut SketchStream,
) -> Result<Matrix> {
    if !(tol > 0.0) {
        return Err(Error::invalid("range-finder tolerance must be positive"));
    }
    adapt_range_finder_abs(op, tol * op.frob_norm_sq().sqrt(), block, stream)
}

/// Absolute-threshold variant: stops once `||A - Q Q^T A||_F <= tol_abs`.
pub(crate) fn adapt_range_finder_abs(
    op: &dyn LinearOperator,
    tol_abs: f64,
    block: usize,
    stream: &mut SketchStream,
) -> Result<Matrix> {
    if block == 0 {
        return Err(Error::invalid("range-finder block size must be at least 1"));
    }
    let (rows, cols) = (op.rows(), op.cols());
    let max_rank = rows.min(cols);
    let norm_sq = op.frob_norm_sq();
    let target = (tol_abs * tol_abs).max(0.0);
    // Accumulated downdating and inner-product roundoff grow with the
    // operator dimensions; inside this generous multiple of the floor the
    // tracked value cannot be trusted in either direction.
    let noise_floor = 4096f64.max(64.0 * rows.max(cols) as f64) * f64::EPSILON * norm_sq;
    let noise_zone = target < noise_floor;
    let mut q = Matrix::zeros(rows, 0);
    let mut residual_sq = norm_sq;
    let mut rho_sq = norm_sq;
    let mut empty_streak = 0usize;
    let mut probe_hit = false;
    let converged = loop {
        if q.cols() == max_rank {
            break false;
        }
        if residual_sq <= target || probe_hit {
            if !noise_zone {
                rho_sq = residual_sq;
                break true;
            }
            let explicit = op.residual_norm_sq(&q);
            if explicit <= target {
                rho_sq = explicit;
                break true;
            }
            // The tracker (or the probe) was optimistic: re-anchor on the
            // true value, discarding the accumulated cancellation error,
            // and keep growing the basis.
            residual_sq = explicit;
        }
        let b = block.min(max_rank - q.cols());
        let omega = stream.gaussian_block(cols, b);
        let w = op.apply(&omega);
        // Orthonormalize the block columns against the basis and each other
        // (two Gram-Schmidt passes). Columns that collapse to roundoff are
        // numerically inside the current span; normalizing them would
        // amplify noise into spurious, non-orthogonal directions, so they
        // are dropped instead.
        let floor = 1e-12 * w.frob_norm_sq().sqrt().max(norm_sq.sqrt());
        let mut qb = Matrix::zeros(rows, 0);
        let mut probe_min_sq = f64::INFINITY;
        for c in 0..b {
            let mut v = Matrix::from_col_major(rows, 1, w.col(c).to_vec())?;
            for _ in 0..2 {
                if q.cols() > 0 {
                    v = v.sub(&q.matmul(&q.t_matmul(&v)));
                }
                if qb.cols() > 0 {
                    v = v.sub(&qb.matmul(&qb.t_matmul(&v)));
                }
            }
            let n_sq = v.frob_norm_sq();
            probe_min_sq = probe_min_sq.min(n_sq);
            let n = n_sq.sqrt();
            if n > floor {
                v.scale(1.0 / n);
                qb.append_cols(&v);
            }
        }
        // Each remainder norm is an unbiased estimate of the residual at
        // the moment that column was projected (`E ||(I - QQ^T) A w||^2 =
        // ||A - QQ^T A||_F^2` for a Gaussian w), free of the tracker's
        // cancellation. A small probe is the noise-zone cue that paying for
        // an explicit check is worthwhile.
        probe_hit = noise_zone && probe_min_sq <= target;
        if qb.cols() == 0 {
            // The sketch found nothing new: the range looks exhausted. One
            // empty block may still be a statistical dip of a last remaining
            // direction, so demand a second independent miss before giving
            // up on an unmet target.
            empty_streak += 1;
            if empty_streak >= 2 {
                break false;
            }
            continue;
        }
        empty_streak = 0;
        let bt = op.apply_transpose(&qb);
        residual_sq = (residual_sq - bt.frob_norm_sq()).max(0.0);
        q.append_cols(&qb);
    };
    if q.cols() == 0 {
        // Zero operator (or tolerance already met): any unit vector spans an
        // acceptable range; keep the basis non-empty for downstream use.
        let mut e = Matrix::zeros(rows, 1);
        e.set(0, 0, 1.0);
        return Ok(e);
    }
    if !converged {
        // Exhaustion or a full basis: measure what was actually achieved so
        // the trim works against an honest budget.
        rho_sq = op.residual_norm_sq(&q);
    }
    trim_basis(op, q, rho_sq, target)
}

/// Cuts a grown basis down to the smallest leading set of projected
/// singular directions that still meets the absolute squared target
/// `rho_sq + (dropped eigenvalue mass) <= target`, verifying the cut
/// explicitly. Randomized growth typically overshoots the minimal rank by a
/// column or two; the trim restores minimality without weakening the
/// certified residual.
fn trim_basis(op: &dyn LinearOperator, q: Matrix, rho_sq: f64, target: f64) -> Result<Matrix> {
    let k = q.cols();
    if k <= 1 {
        return Ok(q);
    }
    // Eigenvalues of (Q^T A)(Q^T A)^T are the squared singular values of
    // the projected operator; dropping the directions beyond r adds exactly
    // their eigenvalue sum to the squared residual (orthogonal split).
    let (lambda, u) = eigh(&op.projected_gram(&q))?;
    let mut tail = vec![0.0f64; k + 1];
    for i in (0..k).rev() {
        tail[i] = tail[i + 1] + lambda[i].max(0.0);
    }
    let mut r = (1..k).find(|&r| rho_sq + tail[r] <= target).unwrap_or(k);
    // The eigenvalues carry rounding of order `eps * ||A||_F^2`, which is
    // comparable to the tightest targets, so the cut is confirmed against
    // an explicit residual and widened if it falls short.
    while r < k {
        let qt = q.matmul(&u.first_cols(r));
        if op.residual_norm_sq(&qt) <= target {
            return Ok(qt);
        }
        r += 1;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn blocks_partition_consistently() {
        let mut whole = SketchStream::new(7, 3);
        let all = whole.gaussian_block(5, 8);
        let mut parts = SketchStream::new(7, 3);
        let mut a = parts.gaussian_block(5, 3);
        a.append_cols(&parts.gaussian_block(5, 5));
        assert_eq!(all.data(), a.data());
    }

    #[test]
    fn row_sampler_matches_block() {
        let mut s1 = SketchStream::new(11, 0);
        let block = s1.gaussian_block(10, 6);
        let mut s2 = SketchStream::new(11, 0);
        let mut sampler = s2.row_sampler(6);
        let mut row = vec![0.0; 6];
        for i in 0..10 {
            sampler.fill_row(&mut row);
            for j in 0..6 {
                assert_eq!(row[j], block.get(i, j));
            }
        }
        assert_eq!(s1.cursor, s2.cursor);
    }

    #[test]
    fn streams_and_seeds_differ() {
        let a = SketchStream::new(1, 0).gaussian_block(4, 4);
        let b = SketchStream::new(1, 1).gaussian_block(4, 4);
        let c = SketchStream::new(2, 0).gaussian_block(4, 4);
        assert!(a.sub(&b).max_abs() > 1e-8);
        assert!(a.sub(&c).max_abs() > 1e-8);
    }

    #[test]
    fn gaussian_moments_are_sane() {
        let mut s = SketchStream::new(42, 9);
        let m = s.gaussian_block(2000, 5);
        let n = (m.rows() * m.cols()) as f64;
        let mean: f64 = m.data().iter().sum::<f64>() / n;
        let var: f64 = m.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    fn synthetic_low_rank(m: usize, n: usize, s: &[f64]) -> Matrix {
        // Deterministic full-rank-ish factors, orthonormalized by QR.
        let a = Matrix::from_fn(m, s.len(), |i, j| ((i * 7 + j * 3 + 1) as f64).sin());
        let b = Matrix::from_fn(n, s.len(), |i, j| ((i * 5 + j * 11 + 2) as f64).cos());
        let (u, _) = thin_qr(&a).unwrap();
        let (v, _) = thin_qr(&b).unwrap();
        u.matmul(&Matrix::diag(s)).matmul_t(&v)
    }

    #[test]
    fn randsvd_recovers_low_rank_matrix() {
        let a = synthetic_low_rank(30, 20, &[5.0, 2.0, 0.8]);
        let op = MatrixOp::new(&a);
        let mut stream = SketchStream::new(3, 0);
        let svd = randsvd(&op, 3, 5, 0, &mut stream).unwrap();
        assert_relative_eq!(svd.s[0], 5.0, max_relative = 1e-8);
        assert_relative_eq!(svd.s[1], 2.0, max_relative = 1e-8);
        assert_relative_eq!(svd.s[2], 0.8, max_relative = 1e-7);
        let rec = svd
            .u
            .matmul(&Matrix::diag(&svd.s))
            .matmul_t(&svd.v);
        assert!(a.sub(&rec).max_abs() < 1e-8);
        assert!(svd.u.orthonormality_defect() < 1e-10);
        assert!(svd.v.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn randsvd_rejects_oversized_sketches() {
        let a = Matrix::identity(6);
        let op = MatrixOp::new(&a);
        let mut stream = SketchStream::new(0, 0);
        assert!(randsvd(&op, 5, 2, 0, &mut stream).is_err());
        assert!(randsvd(&op, 0, 2, 0, &mut stream).is_err());
    }

    #[test]
    fn power_iterations_help_on_flat_spectra() {
        // Slowly decaying spectrum: plain sketching is noticeably worse than
        // one round of subspace iteration on the same seed.
        let s: Vec<f64> = (0..20).map(|i| 0.85f64.powi(i)).collect();
        let a = synthetic_low_rank(40, 30, &s);
        let op = MatrixOp::new(&a);
        let err = |q: usize, seed: u64| {
            let mut stream = SketchStream::new(seed, 0);
            let svd = randsvd(&op, 5, 2, q, &mut stream).unwrap();
            let rec = svd.u.matmul(&Matrix::diag(&svd.s)).matmul_t(&svd.v);
            a.sub(&rec).frob_norm_sq().sqrt()
        };
        let mut wins = 0;
        for seed in 0..10 {
            if err(2, seed) <= err(0, seed) + 1e-12 {
                wins += 1;
            }
        }
        assert!(wins >= 9, "power iteration helped in only {wins}/10 trials");
    }

    #[test]
    fn unfolding_operators_match_materialized_unfoldings() {
        let t = DenseTensor::from_fn(&[4, 3, 5], |idx| {
            (idx[0] as f64 + 1.0) * (idx[1] as f64 + 2.0).sin() + idx[2] as f64
        })
        .unwrap();
        let sparse = SparseTensor::new(
            &[4, 3, 5],
            vec![
                (vec![0, 0, 0], 2.0),
                (vec![3, 2, 4], -1.0),
                (vec![1, 1, 2], 0.5),
                (vec![2, 0, 3], 4.0),
            ],
        )
        .unwrap();
        for mode in 0..3 {
            let unfolded = t.unfold(mode).unwrap();
            let op = DenseUnfoldingOp::new(&t, mode).unwrap();
            let m = Matrix::from_fn(op.cols(), 2, |i, j| ((i + 3 * j) as f64).cos());
            assert!(op.apply(&m).sub(&unfolded.matmul(&m)).max_abs() < 1e-12);
            let w = Matrix::from_fn(op.rows(), 2, |i, j| ((2 * i + j) as f64).sin());
            assert!(op
                .apply_transpose(&w)
                .sub(&unfolded.t_matmul(&w))
                .max_abs()
                < 1e-12);

            let sdense = sparse.to_dense().unwrap();
            let sop = SparseUnfoldingOp::new(&sparse, mode).unwrap();
            let dop = DenseUnfoldingOp::new(&sdense, mode).unwrap();
            assert!(sop.apply(&m).sub(&dop.apply(&m)).max_abs() < 1e-12);
            assert!(sop
                .apply_transpose(&w)
                .sub(&dop.apply_transpose(&w))
                .max_abs()
                < 1e-12);
            assert_eq!(sop.rows(), dop.rows());
            assert_eq!(sop.cols(), dop.cols());
        }
    }

    #[test]
    fn range_finder_meets_requested_tolerance() {
        let a = synthetic_low_rank(40, 25, &[4.0, 3.0, 1.0, 0.5, 0.1, 0.02]);
        let op = MatrixOp::new(&a);
        for &tol in &[0.5, 0.1, 1e-3, 1e-9] {
            let mut stream = SketchStream::new(5, 1);
            let q = adapt_range_finder(&op, tol, 4, &mut stream).unwrap();
            assert!(q.orthonormality_defect() < 1e-10);
            // Verify the claim with an explicit residual, not the internal
            // norm identity.
            let residual = a.sub(&q.matmul(&q.t_matmul(&a))).frob_norm_sq().sqrt();
            assert!(
                residual <= tol * a.frob_norm_sq().sqrt() + 1e-12,
                "tol {tol}: residual {residual}"
            );
        }
    }

    #[test]
    fn range_finder_stops_at_exact_rank() {
        let a = synthetic_low_rank(30, 30, &[2.0, 1.0, 0.5]);
        let op = MatrixOp::new(&a);
        let mut stream = SketchStream::new(8, 0);
        let q = adapt_range_finder(&op, 1e-10, 4, &mut stream).unwrap();
        // Exact rank 3: one extra block may be drawn before the residual
        // check fires, but the basis must stay small and cannot grow past
        // the point where the sketch returns nothing new.
        assert!(q.cols() <= 8, "basis has {} columns", q.cols());
        let residual = a.sub(&q.matmul(&q.t_matmul(&a))).frob_norm_sq().sqrt();
        assert!(residual <= 1e-10 * a.frob_norm_sq().sqrt() + 1e-12);
    }

    #[test]
    fn range_finder_handles_zero_operator() {
        let a = Matrix::zeros(6, 4);
        let op = MatrixOp::new(&a);
        let mut stream = SketchStream::new(1, 0);
        let q = adapt_range_finder(&op, 0.5, 2, &mut stream).unwrap();
        assert_eq!(q.cols(), 1);
        assert!(q.orthonormality_defect() < 1e-14);
    }

    #[test]
    fn explicit_residuals_match_materialized_unfoldings() {
        let t = DenseTensor::from_fn(&[4, 3, 5], |idx| {
            (idx[0] as f64 + 1.0) * (idx[1] as f64 + 2.0).sin() + idx[2] as f64
        })
        .unwrap();
        let sparse = SparseTensor::new(
            &[4, 3, 5],
            vec![
                (vec![0, 0, 0], 2.0),
                (vec![3, 2, 4], -1.0),
                (vec![1, 1, 2], 0.5),
                (vec![2, 0, 3], 4.0),
                (vec![1, 2, 3], -2.5),
            ],
        )
        .unwrap();
        let sdense = sparse.to_dense().unwrap();
        for mode in 0..3 {
            let dim = t.shape()[mode];
            for k in 0..=2usize {
                let raw = Matrix::from_fn(dim, k, |i, j| ((i * 3 + j * 5 + 1) as f64).sin());
                let q = if k == 0 {
                    Matrix::zeros(dim, 0)
                } else {
                    thin_qr(&raw).unwrap().0
                };
                let check = |op: &dyn LinearOperator, a: &Matrix| {
                    let direct = if k == 0 {
                        a.frob_norm_sq()
                    } else {
                        a.sub(&q.matmul(&q.t_matmul(a))).frob_norm_sq()
                    };
                    let got = op.residual_norm_sq(&q);
                    assert_relative_eq!(got, direct, max_relative = 1e-12);
                };
                let unfolded = t.unfold(mode).unwrap();
                check(&DenseUnfoldingOp::new(&t, mode).unwrap(), &unfolded);
                check(&MatrixOp::new(&unfolded), &unfolded);
                let sunfolded = sdense.unfold(mode).unwrap();
                check(&SparseUnfoldingOp::new(&sparse, mode).unwrap(), &sunfolded);
            }
        }
    }

    #[test]
    fn range_finder_holds_targets_near_the_rounding_floor() {
        // Spectrum reaching 1e-9 relative: an 1e-7 relative target squared
        // sits at ~1e-14 * ||A||^2, inside the zone where the tracked norm
        // identity alone could stop early. The explicit confirmation must
        // keep the *true* residual within the target.
        let s: Vec<f64> = (0..24).map(|i| 10f64.powf(-(i as f64) * 9.0 / 23.0)).collect();
        let a = synthetic_low_rank(40, 30, &s);
        let norm = a.frob_norm_sq().sqrt();
        for seed in 0..5 {
            for tol in [1e-6, 1e-7, 1e-8] {
                let mut stream = SketchStream::new(seed, 2);
                let q = adapt_range_finder(&MatrixOp::new(&a), tol, 1, &mut stream).unwrap();
                let residual = a.sub(&q.matmul(&q.t_matmul(&a))).frob_norm_sq().sqrt();
                assert!(
                    residual <= tol * norm,
                    "seed {seed} tol {tol}: residual {residual:.3e} vs {:.3e}",
                    tol * norm
                );
            }
        }
    }
}
