//! Region-level compression of the inverse-density MGC kernel.
//!
//! The compressed kernel is never formed from the pointwise `n × n` ID-MGC
//! kernel. Instead `B = G Z` (with `Z` the point-to-region indicator) is
//! accumulated row by row and `K_S = Bᵀ diag(1/q) B`, so the cost is
//! `O(nnz(G) + Σ_x nnz(B_x)²)`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kernel::{DegreeVector, KernelMatrix};
use crate::linalg::CsrMatrix;

/// Assignment of every point to exactly one region, with one centroid point
/// per region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    centroids: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    /// Validates that regions are non-empty and each centroid lies in its own
    /// region.
    pub fn new(assignment: Vec<usize>, centroids: Vec<usize>) -> Result<Self> {
        let n = assignment.len();
        let n_regions = centroids.len();
        if n == 0 || n_regions == 0 {
            return Err(Error::Partition(
                "partition needs at least one point and one region".into(),
            ));
        }
        let mut sizes = vec![0usize; n_regions];
        for (x, &r) in assignment.iter().enumerate() {
            if r >= n_regions {
                return Err(Error::Partition(format!(
                    "point {x} assigned to region {r} of {n_regions}"
                )));
            }
            sizes[r] += 1;
        }
        if let Some(r) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Partition(format!("region {r} is empty")));
        }
        for (r, &c) in centroids.iter().enumerate() {
            if c >= n {
                return Err(Error::Partition(format!("centroid {c} of region {r} is out of range")));
            }
            if assignment[c] != r {
                return Err(Error::Partition(format!(
                    "centroid {c} of region {r} is assigned to region {}",
                    assignment[c]
                )));
            }
        }
        Ok(Partition {
            assignment,
            centroids,
            sizes,
        })
    }

    /// Uses the lowest-index member of each region as its centroid.
    pub fn from_assignment(assignment: Vec<usize>, n_regions: usize) -> Result<Self> {
        let mut centroids = vec![usize::MAX; n_regions];
        for (x, &r) in assignment.iter().enumerate() {
            if r < n_regions && centroids[r] == usize::MAX {
                centroids[r] = x;
            }
        }
        if let Some(r) = centroids.iter().position(|&c| c == usize::MAX) {
            return Err(Error::Partition(format!("region {r} is empty")));
        }
        Self::new(assignment, centroids)
    }

    /// Every point is its own region.
    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            centroids: (0..n).collect(),
            sizes: vec![1; n],
        }
    }

    /// One region holding every point, centred on point 0.
    pub fn whole(n: usize) -> Self {
        Partition {
            assignment: vec![0; n],
            centroids: vec![0],
            sizes: vec![n],
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_regions(&self) -> usize {
        self.centroids.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn centroids(&self) -> &[usize] {
        &self.centroids
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Member points of each region, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (x, &r) in self.assignment.iter().enumerate() {
            out[r].push(x);
        }
        out
    }

    /// Sum of `values` over each region.
    pub fn region_sums(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_regions()];
        for (&r, v) in self.assignment.iter().zip(values) {
            out[r] += v;
        }
        out
    }
}

/// Region-level operators produced by compressing the ID-MGC kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedOperators {
    /// `K_S`, symmetric `n_S × n_S`.
    pub kernel: Array2<f64>,
    /// Row sums of `K_S`.
    pub degrees: Vec<f64>,
    /// Row-stochastic `P_S`.
    pub markov: Array2<f64>,
    /// Row-normalized `n × n_S` region-to-point weights.
    pub interp: CsrMatrix,
}

fn check_partition(g: &KernelMatrix, partition: &Partition) -> Result<()> {
    if partition.n() != g.n() {
        return Err(Error::Partition(format!(
            "partition covers {} points, kernel has {}",
            partition.n(),
            g.n()
        )));
    }
    Ok(())
}

/// `B = G Z`: entry `(x, i)` is `Σ_{y ∈ S_i} g(x, y)`.
pub fn region_affinity(gaussian: &KernelMatrix, partition: &Partition) -> Result<CsrMatrix> {
    check_partition(gaussian, partition)?;
    let n = gaussian.n();
    let n_regions = partition.n_regions();
    let assign = partition.assignment();
    let mut scratch = vec![0.0; n_regions];
    let mut seen = vec![false; n_regions];
    let mut touched: Vec<usize> = Vec::new();
    let mut rows = Vec::with_capacity(n);
    for x in 0..n {
        gaussian.weights().for_each_in_row(x, |y, v| {
            let r = assign[y];
            if !seen[r] {
                seen[r] = true;
                touched.push(r);
            }
            scratch[r] += v;
        });
        touched.sort_unstable();
        let row: Vec<(usize, f64)> = touched.iter().map(|&r| (r, scratch[r])).collect();
        for &r in &touched {
            scratch[r] = 0.0;
            seen[r] = false;
        }
        touched.clear();
        rows.push(row);
    }
    Ok(CsrMatrix::from_rows(n_regions, rows))
}

fn compress_from_affinity(b: &CsrMatrix, q: &[f64]) -> Array2<f64> {
    let n_regions = b.ncols();
    let mut ks = Array2::<f64>::zeros((n_regions, n_regions));
    for (x, &qx) in q.iter().enumerate() {
        let (cols, vals) = b.row(x);
        let inv = 1.0 / qx;
        for (a, (&i, &bi)) in cols.iter().zip(vals).enumerate() {
            let s = bi * inv;
            for (&j, &bj) in cols[a..].iter().zip(&vals[a..]) {
                ks[[i, j]] += s * bj;
            }
        }
    }
    for i in 0..n_regions {
        for j in i + 1..n_regions {
            ks[[j, i]] = ks[[i, j]];
        }
    }
    ks
}

/// Compressed kernel `K_S[i][j] = Σ_{x ∈ S_i} Σ_{y ∈ S_j} K[x][y]` of the
/// ID-MGC kernel `K = G diag(1/q) G`.
pub fn compress_kernel(gaussian: &KernelMatrix, q: &DegreeVector, partition: &Partition) -> Result<Array2<f64>> {
    if q.len() != gaussian.n() {
        return Err(Error::Dimension(format!(
            "{} degrees for {} points",
            q.len(),
            gaussian.n()
        )));
    }
    let b = region_affinity(gaussian, partition)?;
    Ok(compress_from_affinity(&b, q))
}

/// Row sums of `K_S`.
pub fn compressed_degrees(compressed: &Array2<f64>) -> Vec<f64> {
    compressed.outer_iter().map(|r| r.sum()).collect()
}

/// `P_S = diag(1/d_S) K_S`.
pub fn compressed_markov(compressed: &Array2<f64>) -> Result<Array2<f64>> {
    let d = compressed_degrees(compressed);
    if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate(format!("region {i} has zero compressed degree")));
    }
    let mut p = compressed.clone();
    for (mut row, di) in p.outer_iter_mut().zip(&d) {
        row.mapv_inplace(|v| v / di);
    }
    Ok(p)
}

fn interp_from_affinity(b: &CsrMatrix, region_degrees: &[f64], normalize: bool) -> Result<CsrMatrix> {
    let mut w = b.clone();
    w.map_entries(|_, i, v| v / region_degrees[i]);
    if normalize {
        let sums = w.row_sums();
        if let Some(x) = sums.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::Invariant(format!("point {x} has no affinity to any region")));
        }
        w.map_entries(|x, _, v| v / sums[x]);
    }
    Ok(w)
}

/// Transition weights from regions to points before row normalization:
/// `w[x][i] = Σ_{y ∈ S_i} g(y, x) / d_S[i]`, the probability of reaching `x`
/// in one step from a point of `S_i` drawn with prior `q(y) / d_S[i]`.
pub fn region_to_point_unnormalized(
    gaussian: &KernelMatrix,
    q: &DegreeVector,
    partition: &Partition,
) -> Result<CsrMatrix> {
    let b = region_affinity(gaussian, partition)?;
    interp_from_affinity(&b, &partition.region_sums(q), false)
}

/// Region-to-point weights rescaled so each row sums to one.
pub fn region_to_point(gaussian: &KernelMatrix, q: &DegreeVector, partition: &Partition) -> Result<CsrMatrix> {
    let b = region_affinity(gaussian, partition)?;
    interp_from_affinity(&b, &partition.region_sums(q), true)
}

/// Builds `K_S`, its degrees, `P_S` and the interpolation matrix in one pass
/// over the Gaussian kernel.
pub fn compress(gaussian: &KernelMatrix, partition: &Partition) -> Result<CompressedOperators> {
    let b = region_affinity(gaussian, partition)?;
    let kernel = compress_from_affinity(&b, gaussian.degrees());
    let degrees = compressed_degrees(&kernel);
    let markov = compressed_markov(&kernel)?;
    let interp = interp_from_affinity(&b, &degrees, true)?;
    Ok(CompressedOperators {
        kernel,
        degrees,
        markov,
        interp,
    })
}
