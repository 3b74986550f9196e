//! Pointwise kernels: Gaussian affinities, the inverse-density MGC kernel and
//! the Markov / symmetric normalizations built from their degrees.

use std::ops::Deref;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LinearOperator, WeightMatrix};

/// Neighbor count used by the bandwidth heuristic when none is configured.
pub const DEFAULT_BANDWIDTH_NEIGHBORS: usize = 10;

/// `n` points in `m` ambient dimensions, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Input(format!(
                "data matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value {v} at row {i}, column {j}")));
        }
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        Ok(DataMatrix { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::Input(format!(
                "row {i} has {} values, expected {m}",
                rows[i].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), m), flat).map_err(|e| Error::Input(e.to_string()))?;
        Self::new(values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let m = self.dim();
        &self.values.as_slice().expect("standard layout")[i * m..(i + 1) * m]
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.values.select(ndarray::Axis(0), rows))
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row sums of a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(Vec<f64>);

impl DegreeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&q| !(q > 0.0) || !q.is_finite()) {
            return Err(Error::Degenerate(format!(
                "degree {} at index {i} is not positive",
                values[i]
            )));
        }
        Ok(DegreeVector(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DegreeVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Symmetric non-negative affinities with their cached degree vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    weights: WeightMatrix,
    epsilon: Option<f64>,
    neighbors: Option<usize>,
    degrees: DegreeVector,
}

impl KernelMatrix {
    /// Wraps a precomputed weight matrix after checking it is square, finite,
    /// non-negative, exactly symmetric and has no zero row.
    pub fn from_weights(weights: WeightMatrix, epsilon: Option<f64>, neighbors: Option<usize>) -> Result<Self> {
        if let WeightMatrix::Dense(m) = &weights {
            if m.nrows() != m.ncols() {
                return Err(Error::Dimension(format!(
                    "kernel must be square, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if let WeightMatrix::Sparse(m) = &weights {
            if m.nrows() != m.ncols() {
                return Err(Error::Dimension(format!(
                    "kernel must be square, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let n = weights.n();
        if n == 0 {
            return Err(Error::Input("kernel must have at least one row".into()));
        }
        for i in 0..n {
            let mut bad = None;
            weights.for_each_in_row(i, |j, v| {
                if bad.is_none() && (!v.is_finite() || v < 0.0) {
                    bad = Some((j, v));
                }
            });
            if let Some((j, v)) = bad {
                return Err(Error::Input(format!(
                    "kernel entry ({i},{j}) = {v} is not a finite non-negative value"
                )));
            }
        }
        let asym = weights.asymmetry();
        if asym != 0.0 {
            return Err(Error::Input(format!(
                "kernel is not symmetric (max |w_ij - w_ji| = {asym:e})"
            )));
        }
        let degrees = DegreeVector::new(weights.row_sums())?;
        Ok(KernelMatrix {
            weights,
            epsilon,
            neighbors,
            degrees,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn into_weights(self) -> WeightMatrix {
        self.weights
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn neighbors(&self) -> Option<usize> {
        self.neighbors
    }

    /// Cached row sums.
    pub fn degrees(&self) -> &DegreeVector {
        &self.degrees
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights.get(i, j)
    }
}

/// For every point, its `k` nearest other points as `(index, squared distance)`,
/// sorted by distance with ties broken toward the lower index.
pub fn nearest_neighbors(data: &DataMatrix, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = data.n();
    if k == 0 || k >= n {
        return Err(Error::param("neighbors", format!("must be in 1..{n}, got {k}")));
    }
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let mut buf: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let xi = data.point(i);
        buf.clear();
        buf.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(xi, data.point(j)), j)));
        if k < buf.len() {
            buf.select_nth_unstable_by(k - 1, by_dist);
        }
        let head = &mut buf[..k];
        head.sort_unstable_by(by_dist);
        out.push(head.iter().map(|&(d, j)| (j, d)).collect());
    }
    Ok(out)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::param(
            "epsilon",
            format!("must be a positive finite number, got {epsilon}"),
        ));
    }
    Ok(())
}

/// Bandwidth heuristic: squared distance to the `ceil(neighbors / 2)`-th
/// nearest neighbor, averaged over all points.
pub fn default_epsilon(data: &DataMatrix, neighbors: usize) -> Result<f64> {
    let n = data.n();
    if n < 2 {
        return Err(Error::param(
            "epsilon",
            "cannot be estimated from fewer than two points",
        ));
    }
    let rank = neighbors.div_ceil(2).clamp(1, n - 1);
    let knn = nearest_neighbors(data, rank)?;
    let eps = knn.iter().map(|row| row[rank - 1].1).sum::<f64>() / n as f64;
    if eps > 0.0 {
        Ok(eps)
    } else {
        Err(Error::param(
            "epsilon",
            "heuristic produced zero bandwidth (duplicate points?)",
        ))
    }
}

/// Subnormal weights are stored as zero; arithmetic on them is very slow.
#[inline]
pub(crate) fn flush_subnormal(v: f64) -> f64 {
    if v < f64::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

#[inline]
pub(crate) fn gaussian(sq_dist: f64, epsilon: f64) -> f64 {
    flush_subnormal((-sq_dist / epsilon).exp())
}

/// Gaussian kernel `exp(-|x_i - x_j|^2 / epsilon)`.
///
/// With `neighbors = Some(k)` each row keeps its diagonal plus the `k`
/// largest off-diagonal entries, and the result is symmetrized by taking the
/// larger of `(i, j)` and `(j, i)`.
pub fn build_gaussian_kernel(data: &DataMatrix, epsilon: f64, neighbors: Option<usize>) -> Result<KernelMatrix> {
    check_epsilon(epsilon)?;
    let n = data.n();
    let weights = match neighbors {
        None => {
            let mut w = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                w[[i, i]] = 1.0;
                let xi = data.point(i);
                for j in i + 1..n {
                    let v = gaussian(sq_dist(xi, data.point(j)), epsilon);
                    w[[i, j]] = v;
                    w[[j, i]] = v;
                }
            }
            WeightMatrix::Dense(w)
        }
        Some(k) => {
            let knn = nearest_neighbors(data, k)?;
            let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 1.0)]).collect();
            for (i, row) in knn.iter().enumerate() {
                for &(j, d) in row {
                    let v = gaussian(d, epsilon);
                    rows[i].push((j, v));
                    rows[j].push((i, v));
                }
            }
            for row in &mut rows {
                row.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
                row.dedup_by_key(|e| e.0);
            }
            WeightMatrix::Sparse(CsrMatrix::from_rows(n, rows))
        }
    };
    let kernel = KernelMatrix::from_weights(weights, Some(epsilon), neighbors)?;
    debug_assert!(kernel.degrees.iter().all(|&q| q >= 1.0));
    Ok(kernel)
}

/// Row sums of the kernel.
pub fn degrees(kernel: &KernelMatrix) -> DegreeVector {
    kernel.degrees.clone()
}

fn check_degrees(q: &DegreeVector, n: usize) -> Result<()> {
    if q.len() != n {
        return Err(Error::Dimension(format!(
            "degree vector has length {}, kernel has {n} rows",
            q.len()
        )));
    }
    Ok(())
}

/// Inverse-density MGC kernel `K = G diag(1/q) G`, materialized densely.
///
/// Row sums of `K` equal `q` when `q` are the degrees of `G`.
pub fn build_idmgc_kernel(gaussian: &KernelMatrix, q: &DegreeVector) -> Result<KernelMatrix> {
    let n = gaussian.n();
    check_degrees(q, n)?;
    let mut k = Array2::<f64>::zeros((n, n));
    match gaussian.weights() {
        WeightMatrix::Dense(g) => {
            let mut scaled = g.clone();
            for (mut col, &qr) in scaled.columns_mut().into_iter().zip(q.iter()) {
                col.mapv_inplace(|v| v / qr);
            }
            k = scaled.dot(g);
        }
        WeightMatrix::Sparse(g) => {
            for r in 0..n {
                let (cols, vals) = g.row(r);
                let inv = 1.0 / q[r];
                for (&x, &gx) in cols.iter().zip(vals) {
                    let gxr = gx * inv;
                    for (&y, &gy) in cols.iter().zip(vals) {
                        k[[x, y]] += gxr * gy;
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            k[[j, i]] = k[[i, j]];
        }
    }
    KernelMatrix::from_weights(WeightMatrix::Dense(k), gaussian.epsilon, gaussian.neighbors)
}

/// Row-stochastic transition matrix `P = diag(1/q) W`.
pub fn markov_normalize(kernel: &KernelMatrix) -> Result<WeightMatrix> {
    let q = kernel.degrees();
    let mut p = kernel.weights.clone();
    p.map_entries(|i, _, v| v / q[i]);
    Ok(p)
}

/// Symmetric conjugate `diag(q^-1/2) W diag(q^-1/2)` of the Markov matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityOperator {
    matrix: WeightMatrix,
    degrees: DegreeVector,
}

impl AffinityOperator {
    /// Builds the affinity in place, consuming the kernel.
    pub fn from_kernel(kernel: KernelMatrix) -> Result<Self> {
        let degrees = kernel.degrees;
        let mut matrix = kernel.weights;
        scale_symmetric(&mut matrix, &degrees);
        Ok(AffinityOperator { matrix, degrees })
    }

    pub fn matrix(&self) -> &WeightMatrix {
        &self.matrix
    }

    pub fn degrees(&self) -> &DegreeVector {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.matrix.to_dense()
    }
}

impl LinearOperator for AffinityOperator {
    fn dim(&self) -> usize {
        self.matrix.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.apply(x, y)
    }

    fn apply_block(&self, x: ndarray::ArrayView2<f64>) -> Array2<f64> {
        self.matrix.apply_block(x)
    }

    fn prefers_blocks(&self) -> bool {
        self.matrix.prefers_blocks()
    }

    fn to_dense(&self) -> Array2<f64> {
        self.matrix.to_dense()
    }
}

fn scale_symmetric(matrix: &mut WeightMatrix, q: &[f64]) {
    let s: Vec<f64> = q.iter().map(|&v| 1.0 / v.sqrt()).collect();
    // s_i * s_j commutes exactly, so the result stays bitwise symmetric.
    matrix.map_entries(|i, j, v| flush_subnormal(v * (s[i] * s[j])));
}

/// Symmetric affinity built from `kernel` and degrees `q`.
pub fn symmetric_affinity(kernel: &KernelMatrix, q: &DegreeVector) -> Result<AffinityOperator> {
    check_degrees(q, kernel.n())?;
    let mut matrix = kernel.weights.clone();
    scale_symmetric(&mut matrix, q);
    Ok(AffinityOperator {
        matrix,
        degrees: q.clone(),
    })
}
