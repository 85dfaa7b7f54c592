//! Dense factorization kernels: thin QR, thin SVD, symmetric
//! eigendecomposition, spectral norm estimation and strong rank-revealing
//! row selection.
//!
//! Everything here is deterministic: identical inputs produce bit-identical
//! outputs, which the randomized decompositions rely on for seed
//! reproducibility.

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, Matrix};

/// Thin singular value decomposition `X = U diag(S) V^T` with
/// `k = min(rows, cols)` columns in `U` and `V` and `S` sorted descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// Rows chosen by a rank-revealing selection, in increasing order, together
/// with the conditioning `‖(P^T Q)^{-1}‖₂` of the selected submatrix.
#[derive(Debug, Clone)]
pub struct RowSelection {
    pub indices: Vec<usize>,
    pub conditioning: f64,
}

// ---------------------------------------------------------------------------
// Thin QR
// ---------------------------------------------------------------------------

/// Thin Householder QR of a tall matrix: `A = Q R` with `Q` having
/// orthonormal columns and `R` upper triangular with non-negative diagonal
/// (which makes the factorization unique and reproducible).
pub fn thin_qr(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(Error::invalid(format!(
            "thin_qr requires rows >= cols, got {m}x{n}"
        )));
    }
    let mut work = a.clone();
    // Reflector j is stored in column j below the diagonal with implicit
    // leading 1; taus holds the scalar coefficients.
    let mut taus = vec![0.0f64; n];
    for j in 0..n {
        let (tau, beta) = make_householder(work.col_mut(j), j);
        taus[j] = tau;
        if tau != 0.0 {
            // Apply H = I - tau v v^T to the trailing columns.
            let vcol = work.col(j)[j..].to_vec();
            for c in (j + 1)..n {
                let col = &mut work.col_mut(c)[j..];
                let mut w = col[0]; // v[0] == 1
                for i in 1..vcol.len() {
                    w += vcol[i] * col[i];
                }
                w *= tau;
                col[0] -= w;
                for i in 1..vcol.len() {
                    col[i] -= w * vcol[i];
                }
            }
        }
        work.col_mut(j)[j] = beta;
    }

    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j.min(n - 1) {
            if i <= j {
                r.set(i, j, work.get(i, j));
            }
        }
    }

    // Accumulate the thin Q by applying the reflectors to I(:, 0..n)
    // back-to-front.
    let mut q = Matrix::zeros(m, n);
    for j in 0..n {
        q.set(j, j, 1.0);
    }
    for j in (0..n).rev() {
        let tau = taus[j];
        if tau == 0.0 {
            continue;
        }
        let vcol = work.col(j)[j..].to_vec();
        for c in 0..n {
            let col = &mut q.col_mut(c)[j..];
            let mut w = col[0];
            for i in 1..vcol.len() {
                w += vcol[i] * col[i];
            }
            w *= tau;
            col[0] -= w;
            for i in 1..vcol.len() {
                col[i] -= w * vcol[i];
            }
        }
    }
    Ok((q, r))
}

/// Builds a Householder reflector for `col[j..]`, writing the normalized
/// reflector tail in place (implicit leading 1) and returning `(tau, beta)`
/// where `beta >= 0` is the new diagonal entry.
fn make_householder(col: &mut [f64], j: usize) -> (f64, f64) {
    let x = &mut col[j..];
    let x0 = x[0];
    let sigma = dot(&x[1..], &x[1..]);
    if sigma == 0.0 {
        if x0 >= 0.0 {
            // Already in the desired form.
            (0.0, x0)
        } else {
            // Reflect through e1 to flip the sign.
            (2.0, -x0)
        }
    } else {
        let mu = (x0 * x0 + sigma).sqrt();
        let v0 = if x0 <= 0.0 {
            x0 - mu
        } else {
            -sigma / (x0 + mu)
        };
        let tau = 2.0 * v0 * v0 / (sigma + v0 * v0);
        let inv = 1.0 / v0;
        for xi in x.iter_mut().skip(1) {
            *xi *= inv;
        }
        x[0] = 1.0;
        (tau, mu)
    }
}

// ---------------------------------------------------------------------------
// Streaming QR (R-only, by row panels)
// ---------------------------------------------------------------------------

/// Accumulates the triangular factor `R` of a tall matrix presented as a
/// stream of row panels, without ever holding the matrix (or `Q`) in memory.
///
/// After absorbing every panel of `A` (any panel split gives the same result
/// up to row signs), `r()` is upper triangular with `R^T R = A^T A`, so the
/// singular values and right singular vectors of `A` can be read off the
/// small factor. Each absorbed row costs `2 n^2` flops.
#[derive(Debug, Clone)]
pub struct QrAccumulator {
    n: usize,
    r: Matrix,
}

impl QrAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            r: Matrix::zeros(n, n),
        }
    }

    /// Merges a panel of `h` new rows (an `h x n` matrix) into the running
    /// triangular factor by Householder elimination. Only the `h + 1`
    /// nonzero entries of each reflector are touched, so the zero block of
    /// the stacked `[R; panel]` system costs nothing.
    pub fn absorb(&mut self, panel: &mut Matrix) {
        assert_eq!(panel.cols(), self.n, "panel column count mismatch");
        let h = panel.rows();
        if h == 0 {
            return;
        }
        let n = self.n;
        for k in 0..n {
            // Reflector acting on [r_kk; panel[:, k]].
            let rkk = self.r.get(k, k);
            let pk = panel.col(k).to_vec();
            let ssq = rkk * rkk + dot(&pk, &pk);
            if ssq == 0.0 {
                continue;
            }
            let s = ssq.sqrt();
            let alpha = if rkk >= 0.0 { -s } else { s };
            let v0 = rkk - alpha;
            // v^T v = 2 s (s + |r_kk|), nonzero because ssq > 0.
            let tau = 1.0 / (s * (s + rkk.abs()));
            self.r.set(k, k, alpha);
            for j in (k + 1)..n {
                let rkj = self.r.get(k, j);
                let pj = panel.col_mut(j);
                let w = (v0 * rkj + dot(&pk, pj)) * tau;
                self.r.set(k, j, rkj - w * v0);
                axpy(-w, &pk, pj);
            }
            // panel[:, k] is implicitly zero from here on; later iterations
            // never read it again, so skip the store.
        }
    }

    /// The accumulated upper-triangular factor.
    pub fn into_r(self) -> Matrix {
        self.r
    }
}

// ---------------------------------------------------------------------------
// Thin SVD (one-sided Jacobi)
// ---------------------------------------------------------------------------

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Thin SVD via one-sided Jacobi rotations. Singular values are returned in
/// descending order; for rank-deficient inputs the null-space columns of `U`
/// (and `V`) are completed to an orthonormal basis.
pub fn thin_svd(a: &Matrix) -> Result<SvdResult> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::invalid("thin_svd of an empty matrix"));
    }
    if a.rows() >= a.cols() {
        jacobi_svd_tall(a)
    } else {
        let r = jacobi_svd_tall(&a.transpose())?;
        Ok(SvdResult {
            u: r.v,
            s: r.s,
            v: r.u,
        })
    }
}

/// Thin SVD truncated to the leading `r` singular triplets.
pub fn truncated_svd(a: &Matrix, r: usize) -> Result<SvdResult> {
    let k = a.rows().min(a.cols());
    if r == 0 || r > k {
        return Err(Error::invalid(format!(
            "truncation rank {r} out of range 1..={k}"
        )));
    }
    let full = thin_svd(a)?;
    Ok(SvdResult {
        u: full.u.first_cols(r),
        s: full.s[..r].to_vec(),
        v: full.v.first_cols(r),
    })
}

fn jacobi_svd_tall(a: &Matrix) -> Result<SvdResult> {
    let (m, n) = (a.rows(), a.cols());
    debug_assert!(m >= n);
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    let mut sq: Vec<f64> = (0..n).map(|j| dot(w.col(j), w.col(j))).collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = sq[p];
                let beta = sq[q];
                let gamma = dot(w.col(p), w.col(q));
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (wp, wq) = w.cols_mut2(p, q);
                rotate(wp, wq, c, s);
                let (vp, vq) = v.cols_mut2(p, q);
                rotate(vp, vq, c, s);
                sq[p] = alpha - t * gamma;
                sq[q] = beta + t * gamma;
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
        // Refresh cached norms so rounding drift cannot mislead the
        // convergence test.
        for (j, sqj) in sq.iter_mut().enumerate() {
            *sqj = dot(w.col(j), w.col(j));
        }
    }

    // Sort descending by column norm.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sq[j].partial_cmp(&sq[i]).unwrap());

    let mut s = vec![0.0f64; n];
    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = sq[src].max(0.0).sqrt();
        u.col_mut(dst).copy_from_slice(w.col(src));
        vs.col_mut(dst).copy_from_slice(v.col(src));
    }

    // Normalize; complete columns whose singular value is negligible so that
    // U always has orthonormal columns.
    let smax = s[0];
    let tiny = smax * 1e-13;
    for j in 0..n {
        if s[j] > tiny && s[j] > 0.0 {
            let inv = 1.0 / s[j];
            for x in u.col_mut(j) {
                *x *= inv;
            }
        } else {
            complete_basis_column(&mut u, j);
        }
    }
    Ok(SvdResult { u, s, v: vs })
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for i in 0..x.len() {
        let xi = x[i];
        let yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

/// Replaces column `j` of `u` with a unit vector orthogonal to columns
/// `0..j`, found by orthogonalizing coordinate vectors and keeping the one
/// with the largest orthogonal remainder. With orthonormal prior columns the
/// best remainder has norm at least `1/sqrt(m)`, so this never degenerates.
fn complete_basis_column(u: &mut Matrix, j: usize) {
    let m = u.rows();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for cand in 0..m {
        let mut vec = vec![0.0f64; m];
        vec[cand] = 1.0;
        // Two rounds of classical Gram-Schmidt against the accepted columns.
        for _ in 0..2 {
            for prev in 0..j {
                let proj = dot(&vec, u.col(prev));
                axpy(-proj, u.col(prev), &mut vec);
            }
        }
        let norm = dot(&vec, &vec).sqrt();
        if norm > 0.5 {
            // Comfortably independent: no need to scan further candidates.
            best = Some((norm, vec));
            break;
        }
        if best.as_ref().map_or(true, |(b, _)| norm > *b) {
            best = Some((norm, vec));
        }
    }
    match best {
        Some((norm, vec)) if norm > 1e-6 => {
            let inv = 1.0 / norm;
            for (dst, src) in u.col_mut(j).iter_mut().zip(&vec) {
                *dst = src * inv;
            }
        }
        // Unreachable for j < m with orthonormal prior columns: the m
        // coordinate vectors cannot all lie in a j-dimensional subspace.
        _ => panic!("failed to complete orthonormal basis"),
    }
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Eigendecomposition of a symmetric matrix: returns `(values, vectors)` with
/// eigenvalues sorted descending and eigenvectors in the matching columns.
pub(crate) fn eigh(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::invalid("eigh requires a square matrix"));
    }
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    let fnorm = w.frob_norm();
    if fnorm == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    let tol = fnorm * 1e-14;
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += w.get(p, q) * w.get(p, q);
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = w.get(p, p);
                let aqq = w.get(q, q);
                if apq.abs() <= 1e-16 * (app.abs() + aqq.abs()).max(f64::MIN_POSITIVE) {
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // Update rows/columns p and q of the symmetric matrix.
                for i in 0..n {
                    if i != p && i != q {
                        let aip = w.get(i, p);
                        let aiq = w.get(i, q);
                        let nip = c * aip - s * aiq;
                        let niq = s * aip + c * aiq;
                        w.set(i, p, nip);
                        w.set(p, i, nip);
                        w.set(i, q, niq);
                        w.set(q, i, niq);
                    }
                }
                w.set(p, p, app - t * apq);
                w.set(q, q, aqq + t * apq);
                w.set(p, q, 0.0);
                w.set(q, p, 0.0);
                let (vp, vq) = v.cols_mut2(p, q);
                rotate(vp, vq, c, s);
            }
        }
    }

    let mut vals: Vec<f64> = (0..n).map(|i| w.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let mut vecs = Matrix::zeros(n, n);
    let mut sorted = vec![0.0f64; n];
    for (dst, &src) in order.iter().enumerate() {
        sorted[dst] = vals[src];
        vecs.col_mut(dst).copy_from_slice(v.col(src));
    }
    vals = sorted;
    Ok((vals, vecs))
}

// ---------------------------------------------------------------------------
// LU solve
// ---------------------------------------------------------------------------

/// Solves `A X = B` for square `A` via LU with partial pivoting.
pub(crate) fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(Error::invalid("lu_solve dimension mismatch"));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    for k in 0..n {
        // Partial pivot.
        let mut piv = k;
        let mut best = lu.get(k, k).abs();
        for i in (k + 1)..n {
            let v = lu.get(i, k).abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= scale * 1e-15 {
            return Err(Error::numerical(format!(
                "singular system: pivot {best:.3e} at step {k} (matrix scale {scale:.3e})"
            )));
        }
        if piv != k {
            for j in 0..n {
                let t = lu.get(k, j);
                lu.set(k, j, lu.get(piv, j));
                lu.set(piv, j, t);
            }
            for j in 0..x.cols() {
                let t = x.get(k, j);
                x.set(k, j, x.get(piv, j));
                x.set(piv, j, t);
            }
        }
        let inv = 1.0 / lu.get(k, k);
        for i in (k + 1)..n {
            let l = lu.get(i, k) * inv;
            if l != 0.0 {
                lu.set(i, k, l);
                for j in (k + 1)..n {
                    let v = lu.get(i, j) - l * lu.get(k, j);
                    lu.set(i, j, v);
                }
                for j in 0..x.cols() {
                    let v = x.get(i, j) - l * x.get(k, j);
                    x.set(i, j, v);
                }
            }
        }
    }
    // Back substitution.
    for j in 0..x.cols() {
        for i in (0..n).rev() {
            let mut v = x.get(i, j);
            for l in (i + 1)..n {
                v -= lu.get(i, l) * x.get(l, j);
            }
            x.set(i, j, v / lu.get(i, i));
        }
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Spectral norm
// ---------------------------------------------------------------------------

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 1000;

/// Largest singular value, estimated by power iteration on `X^T X` with a
/// deterministic start vector (tolerance 1e-10, at most 1000 iterations).
pub fn spectral_norm(a: &Matrix) -> f64 {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return 0.0;
    }
    let mut v = Matrix::from_fn(n, 1, |_, _| 1.0 / (n as f64).sqrt());
    let mut sigma = 0.0f64;
    for _ in 0..POWER_MAX_ITERS {
        let w = a.matmul(&v);
        let new_sigma = w.frob_norm();
        if new_sigma == 0.0 {
            // Start vector lies in the null space; perturb deterministically.
            let mut k = 0;
            v = Matrix::from_fn(n, 1, |i, _| {
                k += 1;
                if i == k % n {
                    1.0
                } else {
                    0.0
                }
            });
            sigma = 0.0;
            continue;
        }
        let z = a.t_matmul(&w);
        let zn = z.frob_norm();
        if zn == 0.0 {
            return new_sigma;
        }
        let mut next = z;
        next.scale(1.0 / zn);
        let done = (new_sigma - sigma).abs() <= POWER_TOL * new_sigma.max(1e-300);
        sigma = new_sigma;
        v = next;
        if done {
            break;
        }
    }
    sigma
}

// ---------------------------------------------------------------------------
// Strong rank-revealing row selection
// ---------------------------------------------------------------------------

/// Selects `k` rows of an orthonormal-column matrix `q` (with `k = cols(q)`)
/// via column-pivoted QR of `q^T` followed by pairwise swap refinement:
/// swaps are applied while some exchange grows `|det|` of the selected
/// submatrix by a factor greater than `eta`. On return no such swap exists,
/// which bounds the conditioning by `sqrt(1 + eta^2 k (m - k))`.
pub fn srrqr_select(q: &Matrix, k: usize, eta: f64) -> Result<RowSelection> {
    let (m, kc) = (q.rows(), q.cols());
    if k != kc {
        return Err(Error::invalid(format!(
            "srrqr_select expects k == cols(q); got k={k}, cols={kc}"
        )));
    }
    if k == 0 || m < k {
        return Err(Error::invalid(format!(
            "srrqr_select needs rows >= cols >= 1, got {m}x{kc}"
        )));
    }
    if !(eta >= 1.0) {
        return Err(Error::invalid(format!("eta must be >= 1, got {eta}")));
    }
    let defect = q.orthonormality_defect();
    if defect > 1e-8 {
        return Err(Error::invalid(format!(
            "srrqr_select input is not orthonormal (defect {defect:.3e})"
        )));
    }

    let w = q.transpose(); // k x m
    let mut sel = cpqr_pivots(&w, k)?;
    let mut rest: Vec<usize> = (0..m).filter(|i| !sel.contains(i)).collect();

    if !rest.is_empty() {
        // Swap refinement on F = Ws^{-1} Wrest.
        for _ in 0..10_000 {
            let ws = columns(&w, &sel);
            let wrest = columns(&w, &rest);
            let f = lu_solve(&ws, &wrest)?;
            let (mut bi, mut bj, mut best) = (0usize, 0usize, 0.0f64);
            for j in 0..f.cols() {
                for i in 0..f.rows() {
                    let v = f.get(i, j).abs();
                    if v > best {
                        best = v;
                        bi = i;
                        bj = j;
                    }
                }
            }
            if best <= eta {
                break;
            }
            std::mem::swap(&mut sel[bi], &mut rest[bj]);
        }
    }

    sel.sort_unstable();
    let ws = columns(&w, &sel);
    let svd = thin_svd(&ws)?;
    let smin = *svd.s.last().unwrap();
    let conditioning = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
    Ok(RowSelection {
        indices: sel,
        conditioning,
    })
}

/// Column-pivoted QR selection without swap refinement: faster, but only the
/// weaker greedy guarantee. Useful when `srrqr_select` is too slow and the
/// application can tolerate a larger conditioning.
pub fn pivoted_qr_select(q: &Matrix, k: usize) -> Result<RowSelection> {
    let (m, kc) = (q.rows(), q.cols());
    if k != kc || k == 0 || m < k {
        return Err(Error::invalid(format!(
            "pivoted_qr_select needs rows >= cols >= 1 and k == cols, got {m}x{kc}, k={k}"
        )));
    }
    let w = q.transpose();
    let mut sel = cpqr_pivots(&w, k)?;
    sel.sort_unstable();
    let ws = columns(&w, &sel);
    let svd = thin_svd(&ws)?;
    let smin = *svd.s.last().unwrap();
    let conditioning = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
    Ok(RowSelection {
        indices: sel,
        conditioning,
    })
}

/// Interpolative factor `A = Q (P^T Q)^{-1}` for a row selection `P`; the
/// selected rows of `A` form an exact identity submatrix.
pub fn oblique_factor(q: &Matrix, selection: &RowSelection) -> Result<Matrix> {
    let k = q.cols();
    if selection.indices.len() != k {
        return Err(Error::invalid(
            "selection size must equal the number of columns",
        ));
    }
    let sub = q.select_rows(&selection.indices);
    let inv = lu_solve(&sub, &Matrix::identity(k)).map_err(|e| {
        Error::numerical(format!(
            "selected submatrix is singular (conditioning {:.3e}): {e}",
            selection.conditioning
        ))
    })?;
    let mut a = q.matmul(&inv);
    // The selected rows satisfy P^T A = (P^T Q)(P^T Q)^{-1} = I in exact
    // arithmetic; write them as an exact identity so the invariant holds
    // bit-for-bit rather than to roundoff.
    for (col, &row) in selection.indices.iter().enumerate() {
        for j in 0..k {
            a.set(row, j, if j == col { 1.0 } else { 0.0 });
        }
    }
    Ok(a)
}

/// First `k` pivot columns of a column-pivoted Householder QR of `w`.
fn cpqr_pivots(w: &Matrix, k: usize) -> Result<Vec<usize>> {
    let (rows, m) = (w.rows(), w.cols());
    debug_assert!(k <= rows.min(m));
    let mut work = w.clone();
    let mut perm: Vec<usize> = (0..m).collect();
    for step in 0..k {
        // Recompute trailing column norms; cheap at the sizes we target and
        // immune to downdating cancellation.
        let mut best = step;
        let mut best_norm = -1.0f64;
        for j in step..m {
            let nrm = dot(&work.col(j)[step..], &work.col(j)[step..]);
            if nrm > best_norm {
                best_norm = nrm;
                best = j;
            }
        }
        work.swap_cols(step, best);
        perm.swap(step, best);
        let (tau, beta) = make_householder(work.col_mut(step), step);
        if tau != 0.0 {
            let vcol = work.col(step)[step..].to_vec();
            for c in (step + 1)..m {
                let col = &mut work.col_mut(c)[step..];
                let mut acc = col[0];
                for i in 1..vcol.len() {
                    acc += vcol[i] * col[i];
                }
                acc *= tau;
                col[0] -= acc;
                for i in 1..vcol.len() {
                    col[i] -= acc * vcol[i];
                }
            }
        }
        work.col_mut(step)[step] = beta;
    }
    Ok(perm[..k].to_vec())
}

fn columns(w: &Matrix, idx: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(w.rows(), idx.len());
    for (dst, &src) in idx.iter().enumerate() {
        out.col_mut(dst).copy_from_slice(w.col(src));
    }
    out
}
