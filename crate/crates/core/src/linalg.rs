//! Dense and compressed-sparse-row storage for square symmetric operators.
//!
//! Every reduction here runs in a fixed order so results do not depend on
//! how the work is scheduled.

use ndarray::{Array2, ArrayView2, ShapeBuilder};

/// A symmetric linear map `x -> A x` of dimension `dim()`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// `A X` for a block of column vectors, by default one column at a time.
    fn apply_block(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let n = self.dim();
        let mut out = Array2::zeros((n, x.ncols()).f());
        let mut col = vec![0.0; n];
        let mut res = vec![0.0; n];
        for j in 0..x.ncols() {
            col.iter_mut().zip(x.column(j)).for_each(|(c, v)| *c = *v);
            self.apply(&col, &mut res);
            out.column_mut(j).iter_mut().zip(&res).for_each(|(o, r)| *o = *r);
        }
        out
    }

    /// Whether `apply_block` is substantially cheaper per column than
    /// repeated `apply` calls.
    fn prefers_blocks(&self) -> bool {
        false
    }

    /// Dense copy of the operator, by default assembled column by column.
    fn to_dense(&self) -> Array2<f64> {
        let n = self.dim();
        let mut out = Array2::zeros((n, n));
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            for (i, v) in col.iter().enumerate() {
                out[[i, j]] = *v;
            }
        }
        out
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3) + tail
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Columns are sorted
    /// and duplicate columns summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                assert!(j < ncols, "column {j} out of bounds for {ncols} columns");
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(dense: &Array2<f64>) -> Self {
        let rows = dense
            .outer_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        Self::from_rows(dense.ncols(), rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                s += v * x[j];
            }
            *yi = s;
        }
    }

    /// `Y = self * X` for a dense `X` with `ncols` rows.
    pub fn matmul_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut out = Array2::zeros((self.nrows, x.ncols()));
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut out_row = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out_row.scaled_add(v, &x.row(j));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// Applies `f(i, j, value)` to every stored entry in place.
    pub fn map_entries(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                self.values[p] = f(i, self.indices[p], self.values[p]);
            }
        }
    }
}

/// Square weight matrix in either dense or sparse storage.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightMatrix {
    Dense(Array2<f64>),
    Sparse(CsrMatrix),
}

impl WeightMatrix {
    pub fn n(&self) -> usize {
        match self {
            WeightMatrix::Dense(m) => m.nrows(),
            WeightMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, WeightMatrix::Sparse(_))
    }

    /// Stored entries (all `n²` for dense storage).
    pub fn nnz(&self) -> usize {
        match self {
            WeightMatrix::Dense(m) => m.len(),
            WeightMatrix::Sparse(m) => m.nnz(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            WeightMatrix::Dense(m) => m[[i, j]],
            WeightMatrix::Sparse(m) => m.get(i, j),
        }
    }

    /// Calls `f(j, w_ij)` for every stored entry of row `i`, in column order.
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            WeightMatrix::Dense(m) => {
                for (j, &v) in m.row(i).iter().enumerate() {
                    f(j, v);
                }
            }
            WeightMatrix::Sparse(m) => {
                let (cols, vals) = m.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    f(j, v);
                }
            }
        }
    }

    /// Row `i` scattered into a dense vector.
    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.for_each_in_row(i, |j, v| out[j] = v);
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        match self {
            WeightMatrix::Dense(m) => m.outer_iter().map(|r| r.sum()).collect(),
            WeightMatrix::Sparse(m) => m.row_sums(),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            WeightMatrix::Dense(m) => m.clone(),
            WeightMatrix::Sparse(m) => m.to_dense(),
        }
    }

    /// Replaces every entry `w_ij` by `f(i, j, w_ij)`.
    pub fn map_entries(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        match self {
            WeightMatrix::Dense(m) => {
                for ((i, j), v) in m.indexed_iter_mut() {
                    *v = f(i, j, *v);
                }
            }
            WeightMatrix::Sparse(m) => m.map_entries(f),
        }
    }

    /// Largest `|w_ij - w_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            self.for_each_in_row(i, |j, v| {
                worst = worst.max((v - self.get(j, i)).abs());
            });
        }
        worst
    }
}

impl LinearOperator for WeightMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            WeightMatrix::Dense(m) => m.apply(x, y),
            WeightMatrix::Sparse(m) => m.matvec(x, y),
        }
    }

    fn apply_block(&self, x: ArrayView2<f64>) -> Array2<f64> {
        match self {
            WeightMatrix::Dense(m) => m.apply_block(x),
            WeightMatrix::Sparse(_) => {
                let n = self.n();
                let mut out = Array2::zeros((n, x.ncols()).f());
                let mut col = vec![0.0; n];
                let mut res = vec![0.0; n];
                for j in 0..x.ncols() {
                    col.iter_mut().zip(x.column(j)).for_each(|(c, v)| *c = *v);
                    self.apply(&col, &mut res);
                    out.column_mut(j).iter_mut().zip(&res).for_each(|(o, r)| *o = *r);
                }
                out
            }
        }
    }

    fn prefers_blocks(&self) -> bool {
        !self.is_sparse()
    }

    fn to_dense(&self) -> Array2<f64> {
        WeightMatrix::to_dense(self)
    }
}

impl LinearOperator for Array2<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols());
        match self.as_slice() {
            Some(flat) => {
                let n = self.ncols();
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = dot(&flat[i * n..(i + 1) * n], x);
                }
            }
            None => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    fn apply_block(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows(), x.ncols()).f());
        ndarray::linalg::general_mat_mul(1.0, self, &x, 0.0, &mut out);
        out
    }

    fn prefers_blocks(&self) -> bool {
        true
    }

    fn to_dense(&self) -> Array2<f64> {
        self.clone()
    }
}
