//! Dense row-major matrices and the handful of kernels the networks need.
//!
//! Inner loops run over contiguous rows so the compiler can vectorize them;
//! training spends nearly all of its time in the three matmul variants.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// Copies the given rows of `src` into a new matrix, in order.
    pub fn gather_rows(src: &Matrix, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(indices.len(), src.cols);
        for (dst, &i) in indices.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(src.row(i));
        }
        out
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    /// Element-wise `self[i] += scale * other[i]`.
    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

// The gemm kernels below delegate to `matrixmultiply`, which packs and
// dispatches to FMA/AVX paths at runtime; transposes are expressed as
// stride swaps. Shapes are asserted here so callers keep slice safety.

/// `c += a * b` where `a` is m x k, `b` is k x n, `c` is m x n.
pub fn matmul_acc(c: &mut Matrix, a: &Matrix, b: &Matrix) {
    assert_eq!(a.cols, b.rows, "inner dimension mismatch");
    assert_eq!((c.rows, c.cols), (a.rows, b.cols), "output shape mismatch");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            k as isize,
            1,
            b.data.as_ptr(),
            n as isize,
            1,
            1.0,
            c.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c += a^T * b` where `a` is k x m, `b` is k x n, `c` is m x n.
pub fn matmul_transpose_a_acc(c: &mut Matrix, a: &Matrix, b: &Matrix) {
    assert_eq!(a.rows, b.rows, "inner dimension mismatch");
    assert_eq!((c.rows, c.cols), (a.cols, b.cols), "output shape mismatch");
    let (m, k, n) = (a.cols, a.rows, b.cols);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            1,
            m as isize,
            b.data.as_ptr(),
            n as isize,
            1,
            1.0,
            c.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `c += a * b^T` where `a` is m x k, `b` is n x k, `c` is m x n.
pub fn matmul_transpose_b_acc(c: &mut Matrix, a: &Matrix, b: &Matrix) {
    assert_eq!(a.cols, b.cols, "inner dimension mismatch");
    assert_eq!((c.rows, c.cols), (a.rows, b.rows), "output shape mismatch");
    let (m, k, n) = (a.rows, a.cols, b.rows);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            k as isize,
            1,
            b.data.as_ptr(),
            1,
            k as isize,
            1.0,
            c.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Adds a 1 x n bias row to every row of `m`.
pub fn add_bias_rows(m: &mut Matrix, bias: &Matrix) {
    assert_eq!(bias.rows, 1, "bias must be a row vector");
    assert_eq!(m.cols, bias.cols, "bias width mismatch");
    for i in 0..m.rows {
        let row = &mut m.data[i * m.cols..(i + 1) * m.cols];
        for (v, b) in row.iter_mut().zip(&bias.data) {
            *v += b;
        }
    }
}

/// `out[j] += sum_i m[i][j]` — column sums accumulated into a row vector.
pub fn column_sums_acc(out: &mut Matrix, m: &Matrix) {
    assert_eq!(out.rows, 1, "output must be a row vector");
    assert_eq!(out.cols, m.cols, "width mismatch");
    for i in 0..m.rows {
        let row = m.row(i);
        for (o, v) in out.data.iter_mut().zip(row) {
            *o += v;
        }
    }
}
