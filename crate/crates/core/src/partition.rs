//! Coherence-biased centroid sampling and angular-diffusion assignment.
//!
//! Assignment never evaluates `arccos`: the angular diffusion distance is
//! minimized by maximizing `a^{2t}(x, y) / sqrt(ρ_t(y))`, since `ρ_t(x)` does
//! not depend on the candidate centroid.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::compression::Partition;
use crate::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::kernel::AffinityOperator;
use crate::linalg::LinearOperator;

/// Absolute tolerance of the coherence trace identity check.
pub const TRACE_TOLERANCE: f64 = 1e-8;

/// `ρ_t(x) = (A^{2t})_{xx} = ‖a^t(x, ·)‖²` for every point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceVector {
    rho: Vec<f64>,
    t: usize,
}

impl CoherenceVector {
    pub fn values(&self) -> &[f64] {
        &self.rho
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

/// Diffusion coherence of every point. `t = 1` costs one pass over the stored
/// entries of `A`; larger `t` costs `t` matrix-vector products per point.
pub fn diffusion_coherence(affinity: &AffinityOperator, t: usize) -> CoherenceVector {
    let n = affinity.n();
    let rho = match t {
        0 => vec![1.0; n],
        1 => (0..n)
            .map(|i| {
                let mut s = 0.0;
                affinity.matrix().for_each_in_row(i, |_, v| s += v * v);
                s
            })
            .collect(),
        _ => {
            let mut buf = vec![0.0; n];
            (0..n)
                .map(|i| {
                    let mut v = affinity.matrix().row_dense(i);
                    for _ in 1..t {
                        affinity.apply(&v, &mut buf);
                        std::mem::swap(&mut v, &mut buf);
                    }
                    v.iter().map(|x| x * x).sum()
                })
                .collect()
        }
    };
    CoherenceVector { rho, t }
}

/// Checks `|Σ_x μ(x) − Σ_x ρ_t(x)| = |ℓ̂ − Σ_j λ_j^{2t}|`, where `μ(x)` sums
/// the squares of the first `retained` eigenvectors at `x`.
///
/// Requires the full eigendecomposition. Returns the left-hand side.
pub fn verify_coherence_trace(eigs: &EigenSystem, rho: &CoherenceVector, retained: usize) -> Result<f64> {
    let n = eigs.n();
    if eigs.k() != n {
        return Err(Error::param(
            "eigs",
            format!("trace identity needs all {n} eigenpairs, got {}", eigs.k()),
        ));
    }
    if rho.values().len() != n {
        return Err(Error::Dimension(format!(
            "{} coherences for {n} points",
            rho.values().len()
        )));
    }
    if retained > n {
        return Err(Error::param("retained", format!("must be at most {n}, got {retained}")));
    }
    let vectors = eigs.eigenvectors();
    let mu_sum: f64 = (0..n)
        .map(|i| (0..retained).map(|j| vectors[[i, j]].powi(2)).sum::<f64>())
        .sum();
    let rho_sum: f64 = rho.values().iter().sum();
    let spectral: f64 = eigs.eigenvalues().iter().map(|l| l.powi(2 * rho.t() as i32)).sum();
    let lhs = (mu_sum - rho_sum).abs();
    let rhs = (retained as f64 - spectral).abs();
    if (lhs - rhs).abs() > TRACE_TOLERANCE {
        return Err(Error::Invariant(format!(
            "coherence trace identity: |Σμ − Σρ| = {lhs:e} but |ℓ − Σλ^2t| = {rhs:e}"
        )));
    }
    Ok(lhs)
}

/// Draws `n_regions` distinct indices without replacement with inclusion
/// weight proportional to `weights`, using exponential keys `E_i / w_i`
/// (the smallest keys win). Returned in ascending index order.
pub fn sample_centroids(weights: &[f64], n_regions: usize, seed: u64) -> Result<Vec<usize>> {
    let n = weights.len();
    if n_regions == 0 || n_regions > n {
        return Err(Error::param(
            "n_regions",
            format!("must be in 1..={n}, got {n_regions}"),
        ));
    }
    if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Sampling(format!(
            "weight {} at index {i} is not a finite non-negative value",
            weights[i]
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, w)| {
            let e: f64 = Exp1.sample(&mut rng);
            (e / w, i)
        })
        .collect();
    if keys.len() < n_regions {
        return Err(Error::Sampling(format!(
            "only {} positive weights for {n_regions} samples",
            keys.len()
        )));
    }
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if n_regions < keys.len() {
        keys.select_nth_unstable_by(n_regions - 1, by_key);
    }
    let mut chosen: Vec<usize> = keys[..n_regions].iter().map(|&(_, i)| i).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Column `i` holds `a^{2t}(·, y_i) / sqrt(ρ_t(y_i))` for centroid `y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidScoreMatrix {
    pub scores: Array2<f64>,
    pub centroid_rho: Vec<f64>,
}

/// Normalized `2t`-step affinities between every point and each centroid.
pub fn angular_scores(affinity: &AffinityOperator, centroids: &[usize], t: usize) -> Result<CentroidScoreMatrix> {
    let n = affinity.n();
    if t == 0 {
        return Err(Error::param("t", "must be at least 1"));
    }
    let mut sorted = centroids.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("centroids", "must be distinct"));
    }
    if let Some(&c) = sorted.last().filter(|&&c| c >= n) {
        return Err(Error::param(
            "centroids",
            format!("index {c} out of range for {n} points"),
        ));
    }
    let mut scores = Array2::zeros((n, centroids.len()));
    let mut centroid_rho = Vec::with_capacity(centroids.len());
    let mut buf = vec![0.0; n];
    for (i, &y) in centroids.iter().enumerate() {
        // A e_y is row y by symmetry; 2t - 1 products remain.
        let mut v = affinity.matrix().row_dense(y);
        for _ in 1..2 * t {
            affinity.apply(&v, &mut buf);
            std::mem::swap(&mut v, &mut buf);
        }
        let rho = v[y];
        if !(rho > 0.0) {
            return Err(Error::Degenerate(format!("centroid {y} has zero coherence")));
        }
        let s = rho.sqrt();
        for (x, val) in v.iter().enumerate() {
            scores[[x, i]] = val / s;
        }
        centroid_rho.push(rho);
    }
    Ok(CentroidScoreMatrix { scores, centroid_rho })
}

/// Assigns each point to its highest-scoring centroid (lowest region index on
/// ties). Centroids always belong to their own region.
pub fn assign_partitions(scores: &CentroidScoreMatrix, centroids: &[usize]) -> Result<Partition> {
    let s = &scores.scores;
    if s.ncols() != centroids.len() {
        return Err(Error::Dimension(format!(
            "{} score columns for {} centroids",
            s.ncols(),
            centroids.len()
        )));
    }
    let mut assignment: Vec<usize> = s
        .outer_iter()
        .map(|row| {
            let mut best = 0;
            for (i, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    for (r, &c) in centroids.iter().enumerate() {
        assignment[c] = r;
    }
    Partition::new(assignment, centroids.to_vec())
}

/// Samples centroids by coherence and assigns points by angular diffusion
/// distance, both at diffusion time `t`.
pub fn coherence_partition(affinity: &AffinityOperator, n_regions: usize, t: usize, seed: u64) -> Result<Partition> {
    let rho = diffusion_coherence(affinity, t);
    let centroids = sample_centroids(rho.values(), n_regions, seed)?;
    let scores = angular_scores(affinity, &centroids, t)?;
    assign_partitions(&scores, &centroids)
}

/// Per-region locality of a partition with respect to the affinity profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalityDiagnostic {
    /// `max_{z, x ∈ S_j} |a(x, z) − mean_{y ∈ S_j} a(y, z)|`
    pub xi: Vec<f64>,
    /// `max_{x, y ∈ S_j} ‖a(x, ·) − a(y, ·)‖₂`
    pub max_intra_distance: Vec<f64>,
}

impl LocalityDiagnostic {
    /// Whether every region satisfies `max D¹ ≤ 2 ξ_j sqrt(n)`.
    pub fn bound_holds(&self, n: usize) -> bool {
        let root = (n as f64).sqrt();
        self.xi
            .iter()
            .zip(&self.max_intra_distance)
            .all(|(xi, d)| *d <= 2.0 * xi * root * (1.0 + 1e-12) + 1e-15)
    }
}

/// Dense diagnostic; intended for test-scale data.
pub fn partition_locality_diagnostic(affinity: &AffinityOperator, partition: &Partition) -> Result<LocalityDiagnostic> {
    let n = affinity.n();
    if partition.n() != n {
        return Err(Error::Partition(format!(
            "partition covers {} points, affinity has {n}",
            partition.n()
        )));
    }
    let a = affinity.to_dense();
    let mut xi = Vec::with_capacity(partition.n_regions());
    let mut max_d = Vec::with_capacity(partition.n_regions());
    for members in partition.members() {
        let mut mean = vec![0.0; n];
        for &y in &members {
            for (z, m) in mean.iter_mut().enumerate() {
                *m += a[[y, z]];
            }
        }
        let inv = 1.0 / members.len() as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        let mut dev: f64 = 0.0;
        for &x in &members {
            for (z, m) in mean.iter().enumerate() {
                dev = dev.max((a[[x, z]] - m).abs());
            }
        }
        let mut dist: f64 = 0.0;
        for (p, &x) in members.iter().enumerate() {
            for &y in &members[p + 1..] {
                let d2: f64 = (0..n).map(|z| (a[[x, z]] - a[[y, z]]).powi(2)).sum();
                dist = dist.max(d2.sqrt());
            }
        }
        xi.push(dev);
        max_d.push(dist);
    }
    Ok(LocalityDiagnostic {
        xi,
        max_intra_distance: max_d,
    })
}
