//! Coordinate-format sparse tensors.
//!
//! Entries are kept deduplicated (duplicates summed on construction),
//! zero-free and sorted in storage order (first mode fastest), which makes
//! equality, lookup and serialization deterministic.

use std::cmp::Ordering;

use super::{check_mode, split_at_mode, validate_shape, DenseTensor, DENSIFY_CAP};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    shape: Vec<usize>,
    /// Flattened 0-based indices, `order()` entries per stored value.
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Sparse unfolding: triplets `(row, col, value)` of the mode-`j` unfolding,
/// in the tensor's storage order.
#[derive(Debug, Clone)]
pub struct SparseMat {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

/// Storage-order comparison: first mode varies fastest, so higher modes are
/// compared first.
fn cmp_colex(a: &[usize], b: &[usize]) -> Ordering {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl SparseTensor {
    /// Builds a sparse tensor from coordinate entries (0-based indices).
    /// Duplicate coordinates are summed; entries that cancel to exactly zero
    /// are dropped.
    pub fn new(shape: &[usize], entries: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        validate_shape(shape)?;
        let d = shape.len();
        for (idx, _) in &entries {
            if idx.len() != d {
                return Err(Error::invalid(format!(
                    "entry index {idx:?} has {} modes, tensor has {d}",
                    idx.len()
                )));
            }
            for (k, &i) in idx.iter().enumerate() {
                if i >= shape[k] {
                    return Err(Error::invalid(format!(
                        "index {i} out of range for mode {k} (dimension {})",
                        shape[k]
                    )));
                }
            }
        }
        let mut sorted = entries;
        sorted.sort_by(|a, b| cmp_colex(&a.0, &b.0));
        let mut indices = Vec::with_capacity(sorted.len() * d);
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        for (idx, v) in sorted {
            let merge = match values.last() {
                Some(_) if indices.len() >= d && indices[indices.len() - d..] == idx[..] => true,
                _ => false,
            };
            if merge {
                *values.last_mut().unwrap() += v;
            } else {
                indices.extend_from_slice(&idx);
                values.push(v);
            }
        }
        // Drop exact zeros produced by cancellation (or present in input).
        let mut out_indices = Vec::with_capacity(indices.len());
        let mut out_values = Vec::with_capacity(values.len());
        for (e, &v) in values.iter().enumerate() {
            if v != 0.0 {
                out_indices.extend_from_slice(&indices[e * d..(e + 1) * d]);
                out_values.push(v);
            }
        }
        Ok(SparseTensor {
            shape: shape.to_vec(),
            indices: out_indices,
            values: out_values,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn index(&self, e: usize) -> &[usize] {
        let d = self.order();
        &self.indices[e * d..(e + 1) * d]
    }

    pub fn value(&self, e: usize) -> f64 {
        self.values[e]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        let d = self.order();
        self.indices
            .chunks_exact(d)
            .zip(self.values.iter().copied())
    }

    /// Stored value at `idx`, if present.
    pub fn get(&self, idx: &[usize]) -> Option<f64> {
        let d = self.order();
        let mut lo = 0usize;
        let mut hi = self.nnz();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match cmp_colex(&self.indices[mid * d..(mid + 1) * d], idx) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(self.values[mid]),
            }
        }
        None
    }

    pub fn frob_norm_sq(&self) -> f64 {
        crate::matrix::dot(&self.values, &self.values)
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    /// Column index of entry `e` in the mode-`mode` unfolding.
    pub(crate) fn unfold_col(&self, e: usize, mode: usize) -> usize {
        let idx = self.index(e);
        let mut col = 0usize;
        let mut stride = 1usize;
        for (k, &i) in idx.iter().enumerate() {
            if k != mode {
                col += i * stride;
                stride *= self.shape[k];
            }
        }
        col
    }

    /// `||X_(mode) - Q Q^T X_(mode)||_F^2`, computed column by column so the
    /// subtraction happens entrywise before squaring (no large-term
    /// cancellation). Unfolding columns without stored entries project to
    /// zero and contribute nothing, so only `nnz` columns are visited.
    pub(crate) fn unfold_residual_sq(&self, mode: usize, q: &Matrix) -> f64 {
        let dim = self.shape[mode];
        debug_assert_eq!(q.rows(), dim);
        let k = q.cols();
        let mut ids: Vec<usize> = (0..self.nnz()).collect();
        ids.sort_unstable_by_key(|&e| self.unfold_col(e, mode));
        let mut acc = 0.0f64;
        let mut b = vec![0.0f64; k];
        let mut pred = vec![0.0f64; dim];
        let mut start = 0usize;
        while start < ids.len() {
            let col = self.unfold_col(ids[start], mode);
            let mut end = start;
            b.fill(0.0);
            while end < ids.len() && self.unfold_col(ids[end], mode) == col {
                let e = ids[end];
                let row = self.index(e)[mode];
                let v = self.values[e];
                for (kk, bk) in b.iter_mut().enumerate() {
                    *bk += v * q.get(row, kk);
                }
                end += 1;
            }
            // pred = Q b, then subtract the sparse column; what remains is
            // the (negated) residual column.
            pred.fill(0.0);
            for (kk, &bk) in b.iter().enumerate() {
                crate::matrix::axpy(bk, q.col(kk), &mut pred);
            }
            for &e in &ids[start..end] {
                pred[self.index(e)[mode]] -= self.values[e];
            }
            acc += crate::matrix::dot(&pred, &pred);
            start = end;
        }
        acc
    }

    /// `(Q^T X_(mode)) (Q^T X_(mode))^T` for `Q` of shape `I_mode x k`,
    /// accumulated column by column; unfolding columns without stored
    /// entries project to zero and are skipped.
    pub(crate) fn project_gram(&self, mode: usize, q: &Matrix) -> Matrix {
        debug_assert_eq!(q.rows(), self.shape[mode]);
        let k = q.cols();
        let mut ids: Vec<usize> = (0..self.nnz()).collect();
        ids.sort_unstable_by_key(|&e| self.unfold_col(e, mode));
        let mut s = Matrix::zeros(k, k);
        let mut b = vec![0.0f64; k];
        let mut start = 0usize;
        while start < ids.len() {
            let col = self.unfold_col(ids[start], mode);
            let mut end = start;
            b.fill(0.0);
            while end < ids.len() && self.unfold_col(ids[end], mode) == col {
                let e = ids[end];
                let row = self.index(e)[mode];
                let v = self.values[e];
                for (kk, bk) in b.iter_mut().enumerate() {
                    *bk += v * q.get(row, kk);
                }
                end += 1;
            }
            for k2 in 0..k {
                for k1 in 0..=k2 {
                    let cur = s.get(k1, k2) + b[k1] * b[k2];
                    s.set(k1, k2, cur);
                }
            }
            start = end;
        }
        for k2 in 0..k {
            for k1 in 0..k2 {
                let v = s.get(k1, k2);
                s.set(k2, k1, v);
            }
        }
        s
    }

    /// Sparse mode-`mode` unfolding as coordinate triplets.
    pub fn unfold(&self, mode: usize) -> Result<SparseMat> {
        check_mode(&self.shape, mode)?;
        let (left, dim, right) = split_at_mode(&self.shape, mode);
        let entries = (0..self.nnz())
            .map(|e| (self.index(e)[mode], self.unfold_col(e, mode), self.values[e]))
            .collect();
        Ok(SparseMat {
            rows: dim,
            cols: left * right,
            entries,
        })
    }

    /// Mode product `M ·_mode X`; the result is dense.
    pub fn mode_product(&self, m: &Matrix, mode: usize) -> Result<DenseTensor> {
        check_mode(&self.shape, mode)?;
        if m.cols() != self.shape[mode] {
            return Err(Error::invalid(format!(
                "mode product at mode {mode}: matrix has {} columns, tensor dimension is {}",
                m.cols(),
                self.shape[mode]
            )));
        }
        let k = m.rows();
        let mut shape = self.shape.clone();
        shape[mode] = k;
        let mut out = DenseTensor::zeros(&shape)?;
        // Strides of the output tensor.
        let mut strides = vec![1usize; shape.len()];
        for j in 1..shape.len() {
            strides[j] = strides[j - 1] * shape[j - 1];
        }
        let out_values = out.values_mut();
        for (idx, v) in self.iter() {
            let mut base = 0usize;
            for (j, &i) in idx.iter().enumerate() {
                if j != mode {
                    base += i * strides[j];
                }
            }
            let mcol = m.col(idx[mode]);
            let stride = strides[mode];
            for (b, &coeff) in mcol.iter().enumerate() {
                out_values[base + b * stride] += coeff * v;
            }
        }
        Ok(out)
    }

    /// Gram matrix `X_(mode) X_(mode)^T`, accumulated per unfolding column.
    pub(crate) fn mode_gram(&self, mode: usize) -> Matrix {
        let dim = self.shape[mode];
        let mut g = Matrix::zeros(dim, dim);
        // Group entries by unfolding column; sorting keeps the accumulation
        // order deterministic.
        let mut cells: Vec<(usize, usize, f64)> = (0..self.nnz())
            .map(|e| (self.unfold_col(e, mode), self.index(e)[mode], self.values[e]))
            .collect();
        cells.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut start = 0usize;
        while start < cells.len() {
            let col = cells[start].0;
            let mut end = start;
            while end < cells.len() && cells[end].0 == col {
                end += 1;
            }
            for i in start..end {
                let (_, a, va) = cells[i];
                for &(_, b, vb) in &cells[i..end] {
                    let prod = va * vb;
                    let cur = g.get(a, b) + prod;
                    g.set(a, b, cur);
                    if a != b {
                        let cur = g.get(b, a) + prod;
                        g.set(b, a, cur);
                    }
                }
            }
            start = end;
        }
        g
    }

    /// Keeps `indices` (each at most once) along `mode`, relabeling them to
    /// `0..indices.len()` in the given order. Entries outside the selection
    /// are dropped; stored values are copied bit-exactly.
    pub fn select_mode(&self, mode: usize, indices: &[usize]) -> Result<SparseTensor> {
        check_mode(&self.shape, mode)?;
        let dim = self.shape[mode];
        if indices.is_empty() {
            return Err(Error::invalid("selection must keep at least one index"));
        }
        let mut map = vec![usize::MAX; dim];
        for (b, &a) in indices.iter().enumerate() {
            if a >= dim {
                return Err(Error::invalid(format!(
                    "selection index {a} out of range for dimension {dim}"
                )));
            }
            if map[a] != usize::MAX {
                return Err(Error::invalid(format!("selection index {a} repeated")));
            }
            map[a] = b;
        }
        let mut shape = self.shape.clone();
        shape[mode] = indices.len();
        let mut entries = Vec::new();
        for (idx, v) in self.iter() {
            let new_i = map[idx[mode]];
            if new_i != usize::MAX {
                let mut ni = idx.to_vec();
                ni[mode] = new_i;
                entries.push((ni, v));
            }
        }
        SparseTensor::new(&shape, entries)
    }

    /// Dense copy; refuses tensors beyond [`DENSIFY_CAP`] elements.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        let total: usize = self.shape.iter().product();
        if total > DENSIFY_CAP {
            return Err(Error::invalid(format!(
                "refusing to densify {total} elements (cap {DENSIFY_CAP})"
            )));
        }
        let mut t = DenseTensor::zeros(&self.shape)?;
        for (idx, v) in self.iter() {
            let cur = t.get(idx) + v;
            t.set(idx, cur);
        }
        Ok(t)
    }
}
