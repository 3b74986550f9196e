//! Dense reference computations written directly from the defining formulas,
//! independent of the library's kernel, compression and eigen code.

#![allow(dead_code)]

use cfdm::compression::Partition;
use cfdm::kernel::DataMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points uniform in `[0, scale]^m`.
pub fn random_points(n: usize, m: usize, scale: f64, seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DataMatrix::new(Array2::from_shape_fn((n, m), |_| scale * rng.random::<f64>())).unwrap()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `exp(-|x - y|^2 / eps)` for all pairs.
pub fn gaussian(data: &DataMatrix, eps: f64) -> Array2<f64> {
    let n = data.n();
    Array2::from_shape_fn((n, n), |(i, j)| {
        (-squared_distance(data.point(i), data.point(j)) / eps).exp()
    })
}

pub fn row_sums(m: &Array2<f64>) -> Vec<f64> {
    m.rows().into_iter().map(|r| r.sum()).collect()
}

/// `G diag(1/q) G` by explicit triple sum.
pub fn idmgc(g: &Array2<f64>) -> Array2<f64> {
    let n = g.nrows();
    let q = row_sums(g);
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            k[[i, j]] = (0..n).map(|z| g[[i, z]] * g[[z, j]] / q[z]).sum();
        }
    }
    k
}

pub fn markov(w: &Array2<f64>) -> Array2<f64> {
    let d = row_sums(w);
    Array2::from_shape_fn(w.dim(), |(i, j)| w[[i, j]] / d[i])
}

/// `D^{-1/2} W D^{-1/2}`.
pub fn affinity(w: &Array2<f64>) -> Array2<f64> {
    let d = row_sums(w);
    Array2::from_shape_fn(w.dim(), |(i, j)| w[[i, j]] / (d[i] * d[j]).sqrt())
}

pub fn matpow(m: &Array2<f64>, p: usize) -> Array2<f64> {
    let mut out = Array2::eye(m.nrows());
    for _ in 0..p {
        out = out.dot(m);
    }
    out
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue, with
/// eigenvectors as columns.
pub fn symmetric_eigen(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| m[[i, j]]));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(i, c)| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}

pub fn spectral_norm(m: &Array2<f64>) -> f64 {
    symmetric_eigen(m).0.iter().fold(0.0, |a, l| a.max(l.abs()))
}

/// Random partition into `n_regions` non-empty regions; region `i`'s
/// centroid is its first member.
pub fn random_partition(n: usize, n_regions: usize, seed: u64) -> Partition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    for (r, &x) in order.iter().take(n_regions).enumerate() {
        assignment[x] = r;
    }
    for &x in &order[n_regions..] {
        assignment[x] = rng.random_range(0..n_regions);
    }
    Partition::new(assignment, order[..n_regions].to_vec()).unwrap()
}

/// Region indicator matrix `Z`, `n × n_S`.
pub fn indicator(p: &Partition) -> Array2<f64> {
    let mut z = Array2::zeros((p.n(), p.n_regions()));
    for (x, &r) in p.assignment().iter().enumerate() {
        z[[x, r]] = 1.0;
    }
    z
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn argmin(values: impl IntoIterator<Item = f64>) -> usize {
    argmax(values.into_iter().map(|v| -v))
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}
