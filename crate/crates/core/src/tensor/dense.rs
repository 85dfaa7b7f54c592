//! Dense tensors stored first-mode-fastest, with streaming (unfolding-free)
//! contraction kernels sized for tensors that approach available memory.

use super::{check_mode, split_at_mode, validate_shape};
use crate::error::{Error, Result};
use crate::kernels::QrAccumulator;
use crate::matrix::{axpy, dot, Matrix};
use crate::tucker::TuckerTensor;

/// Chunk length for streamed panel kernels; keeps per-chunk working sets in
/// cache while amortizing loop overhead.
const CHUNK: usize = 4096;

/// Smaller chunk for Gram accumulation, where `dim` column slices of the
/// chunk are live at once.
const GRAM_CHUNK: usize = 256;

/// Row-panel height for the streaming QR of transposed unfoldings.
const QR_PANEL: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        let len = shape.iter().product();
        Ok(DenseTensor {
            shape: shape.to_vec(),
            values: vec![0.0; len],
        })
    }

    /// Wraps a first-mode-fastest value buffer.
    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Result<Self> {
        validate_shape(shape)?;
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::invalid(format!(
                "shape {shape:?} needs {len} values, got {}",
                values.len()
            )));
        }
        Ok(DenseTensor {
            shape: shape.to_vec(),
            values,
        })
    }

    /// Fills a tensor by evaluating `f` at every (0-based) multi-index, in
    /// storage order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = DenseTensor::zeros(shape)?;
        let mut idx = vec![0usize; shape.len()];
        for slot in t.values.iter_mut() {
            *slot = f(&idx);
            for k in 0..shape.len() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0usize;
        let mut stride = 1usize;
        for (k, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.shape[k]);
            off += i * stride;
            stride *= self.shape[k];
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let off = self.offset(idx);
        self.values[off] = v;
    }

    pub fn frob_norm_sq(&self) -> f64 {
        dot(&self.values, &self.values)
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    /// Materialized mode-`mode` unfolding (`I_mode` rows). The mode-0
    /// unfolding is a plain reshape of the value buffer.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        check_mode(&self.shape, mode)?;
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        if mode == 0 {
            return Matrix::from_col_major(dim, left * right, self.values.clone());
        }
        let mut m = Matrix::zeros(dim, left * right);
        let data = m.data_mut();
        for r in 0..right {
            let panel = r * left * dim;
            let col0 = r * left;
            for a in 0..dim {
                let src = &self.values[panel + a * left..panel + (a + 1) * left];
                for (l, &v) in src.iter().enumerate() {
                    data[a + dim * (col0 + l)] = v;
                }
            }
        }
        Ok(m)
    }

    /// Inverse of [`unfold`](Self::unfold): reassembles a tensor of shape
    /// `shape` from its mode-`mode` unfolding.
    pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        check_mode(shape, mode)?;
        let (left, dim, right) = split_at_mode(shape, mode);
        if m.rows() != dim || m.cols() != left * right {
            return Err(Error::invalid(format!(
                "unfolding of shape {shape:?} at mode {mode} is {dim}x{}, got {}x{}",
                left * right,
                m.rows(),
                m.cols()
            )));
        }
        if mode == 0 {
            return DenseTensor::from_values(shape, m.data().to_vec());
        }
        let mut t = DenseTensor::zeros(shape)?;
        let data = m.data();
        for r in 0..right {
            let panel = r * left * dim;
            let col0 = r * left;
            for a in 0..dim {
                let dst = &mut t.values[panel + a * left..panel + (a + 1) * left];
                for (l, slot) in dst.iter_mut().enumerate() {
                    *slot = data[a + dim * (col0 + l)];
                }
            }
        }
        Ok(t)
    }

    /// Mode product `M ·_mode X` for `M` sized `K x I_mode`; the result has
    /// the same shape with `I_mode` replaced by `K`.
    pub fn mode_product(&self, m: &Matrix, mode: usize) -> Result<DenseTensor> {
        check_mode(&self.shape, mode)?;
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        if m.cols() != dim {
            return Err(Error::invalid(format!(
                "mode product at mode {mode}: matrix has {} columns, tensor dimension is {dim}",
                m.cols()
            )));
        }
        let k = m.rows();
        let mut shape = self.shape.clone();
        shape[mode] = k;
        let mut out = DenseTensor::zeros(&shape)?;

        if mode == 0 {
            // Columns of the mode-0 unfolding are contiguous on both sides.
            let n = left * right; // == right
            for c in 0..n {
                let src = &self.values[c * dim..(c + 1) * dim];
                let dst = &mut out.values[c * k..(c + 1) * k];
                for (a, &v) in src.iter().enumerate() {
                    if v != 0.0 {
                        axpy(v, m.col(a), dst);
                    }
                }
            }
            return Ok(out);
        }

        let chunk = (65536 / k.max(1)).clamp(64, CHUNK);
        for r in 0..right {
            let src_panel = r * left * dim;
            let dst_panel = r * left * k;
            let mut l0 = 0;
            while l0 < left {
                let c = chunk.min(left - l0);
                for a in 0..dim {
                    let src = &self.values[src_panel + a * left + l0..src_panel + a * left + l0 + c];
                    for b in 0..k {
                        let coeff = m.get(b, a);
                        if coeff != 0.0 {
                            let dst = &mut out.values
                                [dst_panel + b * left + l0..dst_panel + b * left + l0 + c];
                            axpy(coeff, src, dst);
                        }
                    }
                }
                l0 += c;
            }
        }
        Ok(out)
    }

    /// Keeps `indices` (in order) along `mode`.
    pub fn select_mode(&self, mode: usize, indices: &[usize]) -> Result<DenseTensor> {
        check_mode(&self.shape, mode)?;
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        if indices.is_empty() {
            return Err(Error::invalid("selection must keep at least one index"));
        }
        for &i in indices {
            if i >= dim {
                return Err(Error::invalid(format!(
                    "selection index {i} out of range for dimension {dim}"
                )));
            }
        }
        let k = indices.len();
        let mut shape = self.shape.clone();
        shape[mode] = k;
        let mut out = DenseTensor::zeros(&shape)?;
        for r in 0..right {
            let src_panel = r * left * dim;
            let dst_panel = r * left * k;
            for (b, &a) in indices.iter().enumerate() {
                out.values[dst_panel + b * left..dst_panel + (b + 1) * left]
                    .copy_from_slice(&self.values[src_panel + a * left..src_panel + (a + 1) * left]);
            }
        }
        Ok(out)
    }

    /// Gram matrix `X_(mode) X_(mode)^T` (`I_mode` square), accumulated by
    /// streaming over the value buffer without forming the unfolding.
    pub(crate) fn mode_gram(&self, mode: usize) -> Matrix {
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        let mut g = Matrix::zeros(dim, dim);
        // Accumulate the upper triangle (b <= a) only and mirror at the end.
        if mode == 0 {
            let n = right;
            let gd = g.data_mut();
            for c in 0..n {
                let x = &self.values[c * dim..(c + 1) * dim];
                for (a, &v) in x.iter().enumerate() {
                    if v != 0.0 {
                        axpy(v, &x[..=a], &mut gd[a * dim..a * dim + a + 1]);
                    }
                }
            }
        } else {
            for r in 0..right {
                let panel = r * left * dim;
                let mut l0 = 0;
                while l0 < left {
                    let c = GRAM_CHUNK.min(left - l0);
                    for a in 0..dim {
                        let sa = &self.values[panel + a * left + l0..panel + a * left + l0 + c];
                        for b in 0..=a {
                            let sb =
                                &self.values[panel + b * left + l0..panel + b * left + l0 + c];
                            let v = g.get(b, a) + dot(sb, sa);
                            g.set(b, a, v);
                        }
                    }
                    l0 += c;
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                let v = g.get(b, a);
                g.set(a, b, v);
            }
        }
        g
    }

    /// Triangular factor `R` of the QR decomposition of `X_(mode)^T`
    /// (so `R^T R = X_(mode) X_(mode)^T`), accumulated by streaming row
    /// panels of the transposed unfolding. The left singular vectors and
    /// singular values of the unfolding can then be read off an SVD of the
    /// small `I_mode x I_mode` factor, without squaring the conditioning the
    /// way an explicit Gram matrix would.
    pub(crate) fn unfold_r(&self, mode: usize) -> Matrix {
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        let mut acc = QrAccumulator::new(dim);
        // Panel heights repeat (h, ..., h, tail), so at most two buffer
        // shapes are ever allocated.
        if mode == 0 {
            let n = right;
            let h = QR_PANEL.min(n);
            let mut main = Matrix::zeros(h, dim);
            let mut tail: Option<Matrix> = None;
            let mut c0 = 0;
            while c0 < n {
                let c = h.min(n - c0);
                let panel = if c == h {
                    &mut main
                } else {
                    tail.get_or_insert_with(|| Matrix::zeros(c, dim))
                };
                let pd = panel.data_mut();
                for i in 0..c {
                    let row = &self.values[(c0 + i) * dim..(c0 + i + 1) * dim];
                    for (a, &v) in row.iter().enumerate() {
                        pd[a * c + i] = v;
                    }
                }
                acc.absorb(panel);
                c0 += c;
            }
        } else {
            let h = QR_PANEL.min(left);
            let mut main = Matrix::zeros(h, dim);
            let mut tail: Option<Matrix> = None;
            for r in 0..right {
                let base = r * left * dim;
                let mut l0 = 0;
                while l0 < left {
                    let c = h.min(left - l0);
                    let panel = if c == h {
                        &mut main
                    } else {
                        tail.get_or_insert_with(|| Matrix::zeros(c, dim))
                    };
                    let pd = panel.data_mut();
                    for a in 0..dim {
                        pd[a * c..(a + 1) * c].copy_from_slice(
                            &self.values[base + a * left + l0..base + a * left + l0 + c],
                        );
                    }
                    acc.absorb(panel);
                    l0 += c;
                }
            }
        }
        acc.into_r()
    }

    /// `X_(mode) · M` for a materialized `M` with `prod_{k != mode} I_k`
    /// rows; streams over the tensor once.
    pub(crate) fn unfold_apply(&self, mode: usize, m: &Matrix) -> Matrix {
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        let n = left * right;
        assert_eq!(m.rows(), n, "unfold_apply operand row mismatch");
        let k = m.cols();
        let mut y = Matrix::zeros(dim, k);
        if mode == 0 {
            // Mode-0 unfolding columns are contiguous runs of length `dim`;
            // the general panel scheme would collapse to width-1 chunks, so
            // accumulate k axpys per column instead.
            let yd = y.data_mut();
            for c in 0..n {
                let x = &self.values[c * dim..(c + 1) * dim];
                for kk in 0..k {
                    let coeff = m.col(kk)[c];
                    if coeff != 0.0 {
                        axpy(coeff, x, &mut yd[kk * dim..(kk + 1) * dim]);
                    }
                }
            }
            return y;
        }
        for r in 0..right {
            let panel = r * left * dim;
            let c0 = r * left;
            let mut l0 = 0;
            while l0 < left {
                let c = CHUNK.min(left - l0);
                for a in 0..dim {
                    let s = &self.values[panel + a * left + l0..panel + a * left + l0 + c];
                    for kk in 0..k {
                        let w = &m.col(kk)[c0 + l0..c0 + l0 + c];
                        let v = y.get(a, kk) + dot(s, w);
                        y.set(a, kk, v);
                    }
                }
                l0 += c;
            }
        }
        y
    }

    /// `X_(mode) · Ω` where rows of `Ω` are produced on the fly by
    /// `next_row` (called once per unfolding column, in column order); never
    /// materializes `Ω`.
    pub(crate) fn unfold_apply_rows(
        &self,
        mode: usize,
        k: usize,
        mut next_row: impl FnMut(&mut [f64]),
    ) -> Matrix {
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        let mut y = Matrix::zeros(dim, k);
        let mut row = vec![0.0f64; k];
        if mode == 0 {
            // See `unfold_apply`: contiguous columns, one drawn row each.
            let yd = y.data_mut();
            for c in 0..right {
                next_row(&mut row);
                let x = &self.values[c * dim..(c + 1) * dim];
                for (kk, &coeff) in row.iter().enumerate() {
                    axpy(coeff, x, &mut yd[kk * dim..(kk + 1) * dim]);
                }
            }
            return y;
        }
        let mut block = vec![0.0f64; CHUNK * k];
        for r in 0..right {
            let panel = r * left * dim;
            let mut l0 = 0;
            while l0 < left {
                let c = CHUNK.min(left - l0);
                for i in 0..c {
                    next_row(&mut row);
                    for kk in 0..k {
                        block[kk * c + i] = row[kk];
                    }
                }
                for a in 0..dim {
                    let s = &self.values[panel + a * left + l0..panel + a * left + l0 + c];
                    for kk in 0..k {
                        let v = y.get(a, kk) + dot(s, &block[kk * c..(kk + 1) * c]);
                        y.set(a, kk, v);
                    }
                }
                l0 += c;
            }
        }
        y
    }

    /// `(Q^T X_(mode)) (Q^T X_(mode))^T` for orthonormal `Q` (`I_mode x k`),
    /// accumulated chunk-wise so the projected unfolding is never stored.
    pub(crate) fn project_gram(&self, mode: usize, q: &Matrix) -> Matrix {
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        debug_assert_eq!(q.rows(), dim);
        let k = q.cols();
        let mut m = Matrix::zeros(k, k);
        let mut bp = vec![0.0f64; CHUNK * k];
        if mode == 0 {
            // Contiguous columns: form the projected chunk by direct dot
            // products, then one upper-triangle rank-c update.
            let n = right;
            let mut c0 = 0;
            while c0 < n {
                let c = CHUNK.min(n - c0);
                for i in 0..c {
                    let x = &self.values[(c0 + i) * dim..(c0 + i + 1) * dim];
                    for kk in 0..k {
                        bp[kk * c + i] = dot(q.col(kk), x);
                    }
                }
                for k2 in 0..k {
                    for k1 in 0..=k2 {
                        let v = m.get(k1, k2)
                            + dot(&bp[k1 * c..(k1 + 1) * c], &bp[k2 * c..(k2 + 1) * c]);
                        m.set(k1, k2, v);
                    }
                }
                c0 += c;
            }
            for k2 in 0..k {
                for k1 in 0..k2 {
                    let v = m.get(k1, k2);
                    m.set(k2, k1, v);
                }
            }
            return m;
        }
        for r in 0..right {
            let panel = r * left * dim;
            let mut l0 = 0;
            while l0 < left {
                let c = CHUNK.min(left - l0);
                bp[..c * k].fill(0.0);
                for a in 0..dim {
                    let s = &self.values[panel + a * left + l0..panel + a * left + l0 + c];
                    for kk in 0..k {
                        let coeff = q.get(a, kk);
                        if coeff != 0.0 {
                            axpy(coeff, s, &mut bp[kk * c..(kk + 1) * c]);
                        }
                    }
                }
                for k2 in 0..k {
                    for k1 in 0..=k2 {
                        let v = m.get(k1, k2) + dot(&bp[k1 * c..(k1 + 1) * c], &bp[k2 * c..(k2 + 1) * c]);
                        m.set(k1, k2, v);
                    }
                }
                l0 += c;
            }
        }
        for k2 in 0..k {
            for k1 in 0..k2 {
                let v = m.get(k1, k2);
                m.set(k2, k1, v);
            }
        }
        m
    }

    /// `X_(mode)^T · Q`, materialized (`prod_{k != mode} I_k` rows).
    pub(crate) fn unfold_t_apply(&self, mode: usize, q: &Matrix) -> Matrix {
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        debug_assert_eq!(q.rows(), dim);
        let k = q.cols();
        let n = left * right;
        let mut z = Matrix::zeros(n, k);
        if mode == 0 {
            let zd = z.data_mut();
            for c in 0..n {
                let x = &self.values[c * dim..(c + 1) * dim];
                for kk in 0..k {
                    zd[kk * n + c] = dot(q.col(kk), x);
                }
            }
            return z;
        }
        for r in 0..right {
            let panel = r * left * dim;
            let c0 = r * left;
            for a in 0..dim {
                let s = &self.values[panel + a * left..panel + (a + 1) * left];
                for kk in 0..k {
                    let coeff = q.get(a, kk);
                    if coeff != 0.0 {
                        axpy(coeff, s, &mut z.col_mut(kk)[c0..c0 + left]);
                    }
                }
            }
        }
        z
    }

    /// `||X_(mode) - Q Q^T X_(mode)||_F^2`, computed by projecting and
    /// subtracting one chunk of unfolding columns at a time. The subtraction
    /// happens entrywise before squaring, so unlike the norm identity
    /// `||X||^2 - ||Q^T X||^2` the result carries no large-term cancellation
    /// and stays trustworthy far below `eps * ||X||_F^2`.
    pub(crate) fn unfold_residual_sq(&self, mode: usize, q: &Matrix) -> f64 {
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        debug_assert_eq!(q.rows(), dim);
        let k = q.cols();
        let mut acc = 0.0f64;
        if mode == 0 {
            // Contiguous columns of length `dim`: project each one and
            // subtract its reconstruction directly.
            let mut b = vec![0.0f64; k];
            let mut pred = vec![0.0f64; dim];
            for c in 0..right {
                let x = &self.values[c * dim..(c + 1) * dim];
                for kk in 0..k {
                    b[kk] = dot(q.col(kk), x);
                }
                pred.fill(0.0);
                for kk in 0..k {
                    axpy(b[kk], q.col(kk), &mut pred);
                }
                acc += x
                    .iter()
                    .zip(&pred)
                    .map(|(xv, pv)| (xv - pv) * (xv - pv))
                    .sum::<f64>();
            }
            return acc;
        }
        let mut bp = vec![0.0f64; CHUNK * k];
        let mut row = vec![0.0f64; CHUNK];
        for r in 0..right {
            let panel = r * left * dim;
            let mut l0 = 0;
            while l0 < left {
                let c = CHUNK.min(left - l0);
                // B = Q^T S for the dim x c sub-block S of the unfolding.
                bp[..c * k].fill(0.0);
                for a in 0..dim {
                    let s = &self.values[panel + a * left + l0..panel + a * left + l0 + c];
                    for kk in 0..k {
                        let coeff = q.get(a, kk);
                        if coeff != 0.0 {
                            axpy(coeff, s, &mut bp[kk * c..(kk + 1) * c]);
                        }
                    }
                }
                // Second pass: accumulate ||S - Q B||^2 row by row.
                for a in 0..dim {
                    let s = &self.values[panel + a * left + l0..panel + a * left + l0 + c];
                    row[..c].fill(0.0);
                    for kk in 0..k {
                        let coeff = q.get(a, kk);
                        if coeff != 0.0 {
                            axpy(coeff, &bp[kk * c..(kk + 1) * c], &mut row[..c]);
                        }
                    }
                    acc += s
                        .iter()
                        .zip(&row[..c])
                        .map(|(xv, pv)| (xv - pv) * (xv - pv))
                        .sum::<f64>();
                }
                l0 += c;
            }
        }
        acc
    }
}

/// Squared Frobenius error `‖x - reconstruct(t)‖²` computed without
/// materializing the reconstruction: all modes except the largest are
/// expanded, then the remaining mode product is streamed panel by panel
/// against `x`.
pub(crate) fn streamed_error_sq(x: &DenseTensor, t: &TuckerTensor) -> Result<f64> {
    let pivot = (0..x.order())
        .max_by_key(|&j| x.shape()[j])
        .expect("tensor has at least one mode");
    let mut partial = t.core.to_dense()?;
    for (mode, factor) in t.factors.iter().enumerate() {
        if mode != pivot {
            partial = partial.mode_product(factor, mode)?;
        }
    }
    let a = &t.factors[pivot];
    let (left, dim, right) = split_at_mode(x.shape(), pivot);
    let lp = partial.shape()[pivot];
    debug_assert_eq!(a.rows(), dim);
    debug_assert_eq!(a.cols(), lp);

    let chunk = (65536 / dim.max(1)).clamp(64, CHUNK);
    let mut buf = vec![0.0f64; chunk * dim];
    let mut err_sq = 0.0f64;
    for r in 0..right {
        let xp = r * left * dim;
        let pp = r * left * lp;
        let mut l0 = 0;
        while l0 < left {
            let c = chunk.min(left - l0);
            buf[..c * dim].fill(0.0);
            for b in 0..lp {
                let s = &partial.values[pp + b * left + l0..pp + b * left + l0 + c];
                for arow in 0..dim {
                    let coeff = a.get(arow, b);
                    if coeff != 0.0 {
                        axpy(coeff, s, &mut buf[arow * c..(arow + 1) * c]);
                    }
                }
            }
            for arow in 0..dim {
                let xs = &x.values[xp + arow * left + l0..xp + arow * left + l0 + c];
                let rec = &buf[arow * c..(arow + 1) * c];
                for i in 0..c {
                    let d = xs[i] - rec[i];
                    err_sq += d * d;
                }
            }
            l0 += c;
        }
    }
    Ok(err_sq)
}
