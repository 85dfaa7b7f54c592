//! Dense column-major matrices and the small arithmetic core used by the
//! factorization kernels and tensor contractions.

use crate::error::{Error, Result};

/// Dense real matrix stored column-major (column `j` is contiguous).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += x[i] * y[i];
    }
    acc
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += alpha * x[i];
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from a column-major value buffer.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from row slices; convenient for literals in tests.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Matrix::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Two mutable column views, `a != b`.
    #[inline]
    pub(crate) fn cols_mut2(&mut self, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
        assert!(a != b);
        let r = self.rows;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (head, tail) = self.data.split_at_mut(hi * r);
        let first = &mut head[lo * r..(lo + 1) * r];
        let second = &mut tail[..r];
        if a < b {
            (first, second)
        } else {
            (second, first)
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let bcol = other.col(j);
            let ocol = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (l, &b) in bcol.iter().enumerate() {
                if b != 0.0 {
                    axpy(b, &self.data[l * self.rows..(l + 1) * self.rows], ocol);
                }
            }
        }
        out
    }

    /// `self^T * other`; both operands read column-wise, so this is the
    /// cache-friendly product for tall matrices.
    pub fn t_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "t_matmul dimension mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            let bcol = other.col(j);
            for i in 0..self.cols {
                out.set(i, j, dot(self.col(i), bcol));
            }
        }
        out
    }

    /// `self * other^T`.
    pub fn matmul_t(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_t dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for j in 0..other.rows {
            let ocol = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for l in 0..self.cols {
                let b = other.get(j, l);
                if b != 0.0 {
                    axpy(b, &self.data[l * self.rows..(l + 1) * self.rows], ocol);
                }
            }
        }
        out
    }

    /// Gram matrix `self^T * self` of the columns.
    pub fn gram(&self) -> Matrix {
        self.t_matmul(self)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn frob_norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copy of the leading `k` columns.
    pub fn first_cols(&self, k: usize) -> Matrix {
        assert!(k <= self.cols);
        Matrix {
            rows: self.rows,
            cols: k,
            data: self.data[..self.rows * k].to_vec(),
        }
    }

    /// Appends the columns of `other` (same row count) to `self`.
    pub fn append_cols(&mut self, other: &Matrix) {
        assert_eq!(self.rows, other.rows, "append_cols row mismatch");
        self.data.extend_from_slice(&other.data);
        self.cols += other.cols;
    }

    /// New matrix formed by the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), self.cols, |i, j| self.get(idx[i], j))
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (ca, cb) = self.cols_mut2(a, b);
        ca.swap_with_slice(cb);
    }

    /// Max-norm distance of `self^T self` from the identity; small values
    /// certify orthonormal columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.gram();
        let mut worst = 0.0f64;
        for j in 0..g.cols() {
            for i in 0..g.rows() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - target).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_by_hand() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = Matrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]);
        let c = a.matmul(&b);
        assert_eq!(c, Matrix::from_rows(&[vec![19.0, 22.0], vec![43.0, 50.0]]));
    }

    #[test]
    fn transpose_products_agree() {
        let a = Matrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.5 - 1.0);
        let b = Matrix::from_fn(4, 2, |i, j| (i + j) as f64);
        let direct = a.transpose().matmul(&b);
        assert!((direct.sub(&a.t_matmul(&b))).max_abs() < 1e-14);
        let c = Matrix::from_fn(5, 3, |i, j| (i as f64) - (j as f64) * 0.25);
        let direct = a.matmul(&c.transpose());
        assert!((direct.sub(&a.matmul_t(&c))).max_abs() < 1e-14);
    }

    #[test]
    fn select_rows_and_append_cols() {
        let a = Matrix::from_fn(4, 2, |i, j| (10 * i + j) as f64);
        let s = a.select_rows(&[2, 0]);
        assert_eq!(s.row(0), vec![20.0, 21.0]);
        assert_eq!(s.row(1), vec![0.0, 1.0]);
        let mut b = a.clone();
        let extra = Matrix::from_fn(4, 2, |i, j| (100 * i + j) as f64);
        b.append_cols(&extra);
        assert_eq!(b.cols(), 4);
        assert_eq!(b.get(1, 0), 10.0);
        assert_eq!(b.get(1, 2), 100.0);
        assert_eq!(b.get(3, 3), 301.0);
    }
}
