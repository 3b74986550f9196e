//! Landmark-based competitors: diffusion on k-means centroids with Gaussian
//! interpolation, and a volume-weighted Nyström extension.

use log::warn;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::{eigendecompose_with, EigenOptions};
use crate::embedding::{diffusion_map, eigen_power, Embedding, Subject};
use crate::error::{Error, Result};
use crate::kernel::{build_gaussian_kernel, gaussian, sq_dist, AffinityOperator, DataMatrix};
use crate::pipeline::{timed, PhaseTimes, PHASE_EIGENSOLVE, PHASE_INTERPOLATION, PHASE_KERNEL, PHASE_PARTITIONING};

pub const KMEANS_MAX_ITERATIONS: usize = 100;

/// Extension components with `|λ|` below this are dropped.
pub const NYSTROM_MIN_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    CentroidInterp,
    Nystrom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub n_landmarks: usize,
    pub epsilon: f64,
    /// Sparsifies the landmark kernel when smaller than the landmark count.
    pub neighbors: Option<usize>,
    pub t: f64,
    pub k: usize,
    pub seed: u64,
    /// Nyström only: give every landmark volume 1 instead of its cluster size.
    #[serde(default)]
    pub uniform_volume: bool,
}

impl BaselineConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if self.n_landmarks == 0 || self.n_landmarks > n {
            return Err(Error::param(
                "n_landmarks",
                format!("must be in 1..={n}, got {}", self.n_landmarks),
            ));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::param(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.k == 0 || self.k >= self.n_landmarks {
            return Err(Error::param(
                "k",
                format!("must be in 1..{}, got {}", self.n_landmarks, self.k),
            ));
        }
        Ok(())
    }

    fn landmark_neighbors(&self) -> Option<usize> {
        self.neighbors.filter(|&m| m < self.n_landmarks)
    }
}

/// Result of Lloyd's algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centers: Array2<f64>,
    pub assignment: Vec<usize>,
    pub sizes: Vec<usize>,
    pub iterations: usize,
}

fn nearest_center(point: &[f64], centers: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centers.outer_iter().enumerate() {
        let d = sq_dist(point, row.as_slice().expect("standard layout"));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seeds(data: &DataMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = data.n();
    let mut seeds = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(data.point(i), data.point(seeds[0]))).collect();
    while seeds.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just above the running sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every point coincides with a seed; take the first unused index
            (0..n).find(|i| !seeds.contains(i)).unwrap()
        };
        seeds.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(data.point(i), data.point(next)));
        }
    }
    seeds
}

/// k-means with k-means++ seeding. Ties go to the lower center index; an
/// emptied cluster is re-seeded at the point farthest from its own center.
pub fn kmeans(data: &DataMatrix, k: usize, seed: u64, max_iterations: usize) -> Result<KMeans> {
    let n = data.n();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must be in 1..={n}, got {k}")));
    }
    let dim = data.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = plus_plus_seeds(data, k, &mut rng);
    let mut centers = data.values().select(ndarray::Axis(0), &seeds);
    let mut assignment = vec![usize::MAX; n];
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let mut dist = vec![0.0; n];
        let mut changed = false;
        for (i, (a, d)) in assignment.iter_mut().zip(dist.iter_mut()).enumerate() {
            let (c, dd) = nearest_center(data.point(i), &centers);
            if *a != c {
                *a = c;
                changed = true;
            }
            *d = dd;
        }
        let mut sizes = vec![0usize; k];
        for &a in &assignment {
            sizes[a] += 1;
        }
        while let Some(empty) = sizes.iter().position(|&s| s == 0) {
            let far = (0..n)
                .filter(|&i| sizes[assignment[i]] > 1)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if dist[b] >= dist[i] => Some(b),
                    _ => Some(i),
                })
                .expect("k <= n leaves a cluster with two points");
            sizes[assignment[far]] -= 1;
            assignment[far] = empty;
            sizes[empty] = 1;
            dist[far] = 0.0;
            changed = true;
        }
        let mut sums = Array2::<f64>::zeros((k, dim));
        for (i, &a) in assignment.iter().enumerate() {
            for (s, v) in sums.row_mut(a).iter_mut().zip(data.point(i)) {
                *s += v;
            }
        }
        for (mut row, &s) in sums.outer_iter_mut().zip(&sizes) {
            row.mapv_inplace(|v| v / s as f64);
        }
        centers = sums;
        if !changed {
            break;
        }
    }
    let mut sizes = vec![0usize; k];
    for &a in &assignment {
        sizes[a] += 1;
    }
    Ok(KMeans {
        centers,
        assignment,
        sizes,
        iterations,
    })
}

/// Point embedding produced by a baseline, with any non-fatal warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutput {
    pub embedding: Embedding,
    pub clusters: KMeans,
    pub warnings: Vec<String>,
    pub phases: PhaseTimes,
}

/// Gaussian weights from each point to each landmark, shifted by the
/// nearest landmark distance so far points do not underflow.
fn landmark_weights(data: &DataMatrix, landmarks: &Array2<f64>, epsilon: f64, shift: bool) -> Array2<f64> {
    let n = data.n();
    let l = landmarks.nrows();
    let mut w = Array2::zeros((n, l));
    for i in 0..n {
        let x = data.point(i);
        let d: Vec<f64> = landmarks
            .outer_iter()
            .map(|r| sq_dist(x, r.as_slice().expect("standard layout")))
            .collect();
        let base = if shift {
            d.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            0.0
        };
        for (j, dj) in d.iter().enumerate() {
            w[[i, j]] = gaussian(dj - base, epsilon);
        }
    }
    w
}

/// Exact diffusion map on the k-means centroids, carried to every point by
/// a normalized Gaussian-weighted average of centroid coordinates.
pub fn centroid_interp_dm(data: &DataMatrix, cfg: &BaselineConfig) -> Result<BaselineOutput> {
    cfg.validate(data.n())?;
    let mut phases = PhaseTimes::new();
    let clusters = timed(&mut phases, PHASE_PARTITIONING, || {
        kmeans(data, cfg.n_landmarks, cfg.seed, KMEANS_MAX_ITERATIONS)
    })?;
    let affinity = timed(&mut phases, PHASE_KERNEL, || {
        let centers = DataMatrix::new(clusters.centers.clone())?;
        AffinityOperator::from_kernel(build_gaussian_kernel(&centers, cfg.epsilon, cfg.landmark_neighbors())?)
    })?;
    let landmark_map = timed(&mut phases, PHASE_EIGENSOLVE, || {
        let eigs = eigendecompose_with(&affinity, cfg.k + 1, &EigenOptions::default())?;
        diffusion_map(&eigs, affinity.degrees(), cfg.t, cfg.k)
    })?;
    let embedding = timed(&mut phases, PHASE_INTERPOLATION, || {
        let mut w = landmark_weights(data, &clusters.centers, cfg.epsilon, true);
        for mut row in w.outer_iter_mut() {
            let s = row.sum();
            row.mapv_inplace(|v| v / s);
        }
        let coords = w.dot(landmark_map.coordinates());
        Embedding::new(coords, landmark_map.eigenvalues().to_vec(), cfg.t, Subject::Points)
    })?;
    Ok(BaselineOutput {
        embedding,
        clusters,
        warnings: Vec::new(),
        phases,
    })
}

/// Nyström extension of the volume-weighted landmark eigenproblem.
///
/// Landmark degrees use landmark quadrature `q̂(y) = Σ_i v_i g(y, l_i)`, the
/// symmetric system is `V^1/2 A_LL V^1/2`, and each point is extended by
/// `ψ̂_j(x) = (1/λ_j) Σ_i v_i a(x, l_i) φ_j(l_i)` before the usual degree
/// conjugation and `λᵗ` scaling.
pub fn nystrom_dm(data: &DataMatrix, cfg: &BaselineConfig) -> Result<BaselineOutput> {
    cfg.validate(data.n())?;
    let mut phases = PhaseTimes::new();
    let clusters = timed(&mut phases, PHASE_PARTITIONING, || {
        kmeans(data, cfg.n_landmarks, cfg.seed, KMEANS_MAX_ITERATIONS)
    })?;
    let l = cfg.n_landmarks;
    let volumes: Vec<f64> = if cfg.uniform_volume {
        vec![1.0; l]
    } else {
        clusters.sizes.iter().map(|&s| s as f64).collect()
    };
    let sv: Vec<f64> = volumes.iter().map(|v| v.sqrt()).collect();
    let (system, q_l) = timed(&mut phases, PHASE_KERNEL, || {
        let centers = DataMatrix::new(clusters.centers.clone())?;
        let g_ll = build_gaussian_kernel(&centers, cfg.epsilon, cfg.landmark_neighbors())?
            .into_weights()
            .to_dense();
        let q_l: Vec<f64> = (0..l)
            .map(|i| (0..l).map(|j| volumes[j] * g_ll[[i, j]]).sum())
            .collect();
        let mut system = Array2::zeros((l, l));
        for i in 0..l {
            for j in 0..l {
                system[[i, j]] = sv[i] * sv[j] * g_ll[[i, j]] / (q_l[i] * q_l[j]).sqrt();
            }
        }
        Ok((system, q_l))
    })?;
    let eigs = timed(&mut phases, PHASE_EIGENSOLVE, || {
        eigendecompose_with(&system, l.min(cfg.k + 1 + 8), &EigenOptions::default())
    })?;
    let lambda0 = eigs.eigenvalues()[0];
    if (lambda0 - 1.0).abs() > crate::embedding::LEADING_EIGENVALUE_TOLERANCE {
        return Err(Error::Spectrum(format!(
            "leading landmark eigenvalue {lambda0} is not 1"
        )));
    }

    let mut warnings = Vec::new();
    let mut keep = Vec::new();
    for j in 1..eigs.k() {
        let lambda = eigs.eigenvalues()[j];
        if lambda.abs() < NYSTROM_MIN_EIGENVALUE {
            let msg = format!("component {j} dropped: eigenvalue {lambda:e} too small to extend");
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        keep.push(j);
        if keep.len() == cfg.k {
            break;
        }
    }
    if keep.len() < cfg.k {
        let msg = format!("only {} of {} components could be extended", keep.len(), cfg.k);
        warn!("{msg}");
        warnings.push(msg);
    }
    if keep.is_empty() {
        return Err(Error::Spectrum("no landmark component can be extended".into()));
    }

    let embedding = timed(&mut phases, PHASE_INTERPOLATION, || {
        // Landmark values of φ_j = u_j / sqrt(v), pre-weighted by v / (λ_j sqrt(q̂_l)).
        let mut weighted_phi = Array2::zeros((l, keep.len()));
        for (c, &j) in keep.iter().enumerate() {
            let lambda = eigs.eigenvalues()[j];
            for i in 0..l {
                let phi = eigs.eigenvectors()[[i, j]] / sv[i];
                weighted_phi[[i, c]] = volumes[i] * phi / q_l[i].sqrt() / lambda;
            }
        }
        let g_xl = landmark_weights(data, &clusters.centers, cfg.epsilon, false);
        let q_x: Vec<f64> = g_xl
            .outer_iter()
            .map(|r| r.iter().zip(&volumes).map(|(g, v)| g * v).sum())
            .collect();
        if let Some(i) = q_x.iter().position(|&q| !(q > 0.0)) {
            return Err(Error::Degenerate(format!(
                "point {i} has no kernel weight to any landmark"
            )));
        }
        // ψ̂(x) sqrt(q̂(x)) = Σ_i g(x, l_i) weighted_phi[i]; dividing by q̂(x)
        // gives φ̂ = ψ̂ / sqrt(q̂).
        let mut coords = g_xl.dot(&weighted_phi);
        for (mut row, &q) in coords.outer_iter_mut().zip(&q_x) {
            row.mapv_inplace(|v| v / q);
        }
        let mut values = Vec::with_capacity(keep.len());
        for (c, &j) in keep.iter().enumerate() {
            let lambda = eigs.eigenvalues()[j];
            let norm: f64 = coords
                .column(c)
                .iter()
                .zip(&q_x)
                .map(|(f, q)| q * f * f)
                .sum::<f64>()
                .sqrt();
            let scale = eigen_power(lambda, cfg.t)? / norm;
            coords.column_mut(c).mapv_inplace(|v| v * scale);
            values.push(lambda);
        }
        Embedding::new(coords, values, cfg.t, Subject::Points)
    })?;
    Ok(BaselineOutput {
        embedding,
        clusters,
        warnings,
        phases,
    })
}

/// Dispatches on `cfg.method`.
pub fn run_baseline(data: &DataMatrix, cfg: &BaselineConfig) -> Result<BaselineOutput> {
    match cfg.method {
        BaselineMethod::CentroidInterp => centroid_interp_dm(data, cfg),
        BaselineMethod::Nystrom => nystrom_dm(data, cfg),
    }
}
