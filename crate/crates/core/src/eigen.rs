//! Top-k symmetric eigenpairs.
//!
//! Small operators go through a dense decomposition. Large dense operators
//! use Chebyshev-filtered subspace iteration, which works on blocks of
//! vectors; large sparse ones use thick-restart Lanczos with full
//! reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView1, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::AffinityOperator;
use crate::linalg::{axpy, dot, norm2, LinearOperator};

/// Operators at or below this size are decomposed densely under
/// [`EigenSolver::Auto`].
pub const DENSE_CUTOFF: usize = 600;
/// Operator size from which the block solver switches to wide blocks.
const LARGE_OPERATOR: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    #[default]
    Auto,
    Dense,
    Lanczos,
    /// Block Krylov iteration; fastest for dense operators.
    BlockKrylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub solver: EigenSolver,
    /// Residual tolerance relative to the operator norm.
    pub tol: f64,
    /// Krylov subspace size: default `max(2k + 10, k + 40)` for Lanczos and
    /// `max(3k, k + 4p)` for block Krylov.
    pub krylov_dim: Option<usize>,
    /// Block width `p` of block Krylov, default 16.
    pub block_size: Option<usize>,
    /// Budget of matrix-vector products before giving up.
    pub max_matvecs: usize,
    /// Seed of the random start vectors.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            solver: EigenSolver::Auto,
            tol: 1e-10,
            krylov_dim: None,
            block_size: None,
            max_matvecs: 100_000,
            seed: 0x5eed,
        }
    }
}

/// Eigenpairs sorted by descending `|λ|`, eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    eigenvalues: Vec<f64>,
    eigenvectors: Array2<f64>,
}

impl EigenSystem {
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: Array2<f64>) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.ncols() {
            return Err(Error::Dimension(format!(
                "{} eigenvalues for {} eigenvectors",
                eigenvalues.len(),
                eigenvectors.ncols()
            )));
        }
        Ok(EigenSystem {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn vector(&self, j: usize) -> ArrayView1<'_, f64> {
        self.eigenvectors.column(j)
    }

    /// `‖A ψ_j − λ_j ψ_j‖₂` for every pair.
    pub fn residuals<O: LinearOperator + ?Sized>(&self, op: &O) -> Vec<f64> {
        let n = self.n();
        let mut y = vec![0.0; n];
        (0..self.k())
            .map(|j| {
                let v: Vec<f64> = self.vector(j).to_vec();
                op.apply(&v, &mut y);
                y.iter()
                    .zip(&v)
                    .map(|(a, b)| (a - self.eigenvalues[j] * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// `max |ΨᵀΨ − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.eigenvectors.t().dot(&self.eigenvectors);
        g.indexed_iter()
            .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

/// Flips `v` so its largest-magnitude entry is positive. Magnitudes within a
/// relative 1e-10 of the maximum count as ties and go to the lowest index.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let best = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-10)).unwrap_or(0);
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Order by descending magnitude, positive before negative on equal magnitude.
fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .total_cmp(&values[a].abs())
            .then(values[b].total_cmp(&values[a]))
            .then(a.cmp(&b))
    });
    idx
}

/// Full decomposition of a dense symmetric matrix, sorted by `|λ|`.
pub fn dense_symmetric_eigen(matrix: &Array2<f64>) -> Result<EigenSystem> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Dimension(format!("matrix is {}x{}", n, matrix.ncols())));
    }
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (matrix[[i, j]] + matrix[[j, i]]));
    let eig = SymmetricEigen::new(m);
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = magnitude_order(&values);
    let mut vectors = Array2::zeros((n, n));
    let mut sorted = Vec::with_capacity(n);
    let mut col = vec![0.0; n];
    for (c, &src) in order.iter().enumerate() {
        sorted.push(values[src]);
        for (i, x) in col.iter_mut().enumerate() {
            *x = eig.eigenvectors[(i, src)];
        }
        fix_sign(&mut col);
        for (i, x) in col.iter().enumerate() {
            vectors[[i, c]] = *x;
        }
    }
    EigenSystem::new(sorted, vectors)
}

fn truncate(sys: EigenSystem, k: usize) -> EigenSystem {
    let vectors = sys.eigenvectors.slice(ndarray::s![.., ..k]).to_owned();
    EigenSystem {
        eigenvalues: sys.eigenvalues[..k].to_vec(),
        eigenvectors: vectors,
    }
}

/// Top-`k` eigenpairs (by `|λ|`) of a symmetric affinity with default options.
pub fn eigendecompose(affinity: &AffinityOperator, k: usize) -> Result<EigenSystem> {
    eigendecompose_with(affinity, k, &EigenOptions::default())
}

/// Top-`k` eigenpairs of any symmetric operator.
pub fn eigendecompose_with<O: LinearOperator + ?Sized>(op: &O, k: usize, opts: &EigenOptions) -> Result<EigenSystem> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must be in 1..={n}, got {k}")));
    }
    let solver = match opts.solver {
        EigenSolver::Auto if n <= DENSE_CUTOFF => EigenSolver::Dense,
        EigenSolver::Auto if op.prefers_blocks() => EigenSolver::BlockKrylov,
        EigenSolver::Auto => EigenSolver::Lanczos,
        s => s,
    };
    match solver {
        EigenSolver::Lanczos => {
            let krylov = opts.krylov_dim.unwrap_or((2 * k + 10).max(k + 40)).min(n);
            if krylov > k {
                return lanczos(op, k, krylov, opts);
            }
        }
        EigenSolver::BlockKrylov => {
            // Wider blocks pay off once GEMM dominates the restart overhead.
            let wide = n >= LARGE_OPERATOR;
            let p = opts.block_size.unwrap_or(if wide { 48 } else { 16 }).min(n);
            let basis = opts
                .krylov_dim
                .unwrap_or((3 * k).max(k + 4 * p).max(if wide { 8 * p } else { 0 }))
                .min(n);
            if basis >= k + 2 * p {
                return block_krylov(op, k, p, basis, opts);
            }
        }
        _ => {}
    }
    let full = dense_symmetric_eigen(&op.to_dense())?;
    Ok(truncate(full, k))
}

/// Orthonormalizes the columns of a column-major block in place with two
/// passes of modified Gram-Schmidt. Columns that vanish are replaced by
/// random directions.
fn orthonormalize(x: &mut Array2<f64>, rng: &mut ChaCha8Rng) {
    let (n, b) = x.dim();
    let flat = x.as_slice_memory_order_mut().expect("contiguous block");
    for j in 0..b {
        let (done, rest) = flat.split_at_mut(j * n);
        let col = &mut rest[..n];
        let mut original = norm2(col);
        for attempt in 0..3 {
            for _ in 0..2 {
                for i in 0..j {
                    let prev = &done[i * n..(i + 1) * n];
                    let c = dot(prev, col);
                    axpy(-c, prev, col);
                }
            }
            let norm = norm2(col);
            if norm > 1e-10 * original && norm > 0.0 {
                col.iter_mut().for_each(|v| *v /= norm);
                break;
            }
            assert!(
                attempt < 2,
                "cannot extend an orthonormal block of {j} vectors in dimension {n}"
            );
            col.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            original = norm2(col);
        }
    }
}

fn column_major(rows: usize, cols: usize) -> Array2<f64> {
    Array2::zeros((rows, cols).f())
}

/// Thick-restart block Krylov iteration.
///
/// Each cycle grows the basis one block of `p` vectors at a time and
/// orthogonalizes every new block against the whole basis twice; the
/// projected matrix is read off the orthogonalization coefficients. A restart
/// keeps the leading Ritz vectors together with the residual block. Block
/// products let dense operators run at matrix-matrix speed.
fn block_krylov<O: LinearOperator + ?Sized>(
    op: &O,
    k: usize,
    p: usize,
    m: usize,
    opts: &EigenOptions,
) -> Result<EigenSystem> {
    let n = op.dim();
    let keep = (k + (m - k) / 2).min(m - p);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = column_major(n, m);
    {
        let mut first = column_major(n, p);
        first
            .as_slice_memory_order_mut()
            .expect("contiguous block")
            .iter_mut()
            .for_each(|v| *v = rng.random_range(-1.0..1.0));
        orthonormalize(&mut first, &mut rng);
        basis.slice_mut(s![.., ..p]).assign(&first);
    }
    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut start = 0;
    let mut matvecs = 0usize;
    let mut anorm: f64 = 0.0;
    loop {
        let mut lo = start;
        let mut coupling = Array2::<f64>::zeros((p, p));
        let residual_block = loop {
            let hi = lo + p;
            let mut w = op.apply_block(basis.slice(s![.., lo..hi]));
            matvecs += p;
            let image = w.clone();
            let prior = basis.slice(s![.., ..hi]);
            let mut coeffs = Array2::<f64>::zeros((hi, p));
            for _ in 0..2 {
                let mut c = Array2::<f64>::zeros((hi, p));
                general_mat_mul(1.0, &prior.t(), &w, 0.0, &mut c);
                general_mat_mul(-1.0, &prior, &c, 1.0, &mut w);
                coeffs += &c;
            }
            for r in 0..hi {
                for c in 0..p {
                    h[(r, lo + c)] = coeffs[[r, c]];
                    h[(lo + c, r)] = coeffs[[r, c]];
                }
            }
            orthonormalize(&mut w, &mut rng);
            general_mat_mul(1.0, &w.t(), &image, 0.0, &mut coupling);
            if hi + p > m {
                break w;
            }
            for r in 0..p {
                for c in 0..p {
                    h[(hi + r, lo + c)] = coupling[[r, c]];
                    h[(lo + c, hi + r)] = coupling[[r, c]];
                }
            }
            basis.slice_mut(s![.., hi..hi + p]).assign(&w);
            lo = hi;
        };
        let cols = lo + p;
        let projected = h.view((0, 0), (cols, cols));
        let eig = SymmetricEigen::new(0.5 * (projected + projected.transpose()));
        let theta: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let order = magnitude_order(&theta);
        anorm = anorm.max(theta[order[0]].abs());
        let residual = |c: usize| {
            (0..p)
                .map(|r| {
                    let v: f64 = (0..p).map(|q| coupling[[r, q]] * eig.eigenvectors[(lo + q, c)]).sum();
                    v * v
                })
                .sum::<f64>()
                .sqrt()
        };
        let worst = order[..k].iter().map(|&c| residual(c)).fold(0.0, f64::max);
        let converged = worst <= opts.tol * anorm;
        let wanted = if converged { k } else { keep };
        let rotation = Array2::from_shape_fn((cols, wanted), |(i, c)| eig.eigenvectors[(i, order[c])]);
        let mut ritz = column_major(n, wanted);
        general_mat_mul(1.0, &basis.slice(s![.., ..cols]), &rotation, 0.0, &mut ritz);
        if converged {
            let mut vectors = Array2::zeros((n, k));
            let mut col = vec![0.0; n];
            for c in 0..k {
                col.iter_mut().zip(ritz.column(c)).for_each(|(d, s)| *d = *s);
                let norm = norm2(&col);
                col.iter_mut().for_each(|v| *v /= norm);
                fix_sign(&mut col);
                vectors.column_mut(c).iter_mut().zip(&col).for_each(|(d, s)| *d = *s);
            }
            let values = order[..k].iter().map(|&c| theta[c]).collect();
            log::debug!("block krylov converged: k={k} block={p} basis={m} matvecs={matvecs} residual={worst:e}");
            return EigenSystem::new(values, vectors);
        }
        if matvecs + (m - keep) > opts.max_matvecs {
            return Err(Error::Solver {
                iterations: matvecs,
                residual: worst,
            });
        }
        basis.slice_mut(s![.., ..keep]).assign(&ritz);
        basis.slice_mut(s![.., keep..keep + p]).assign(&residual_block);
        h.fill(0.0);
        for (c, &src) in order[..keep].iter().enumerate() {
            h[(c, c)] = theta[src];
        }
        start = keep;
    }
}

fn lanczos<O: LinearOperator + ?Sized>(op: &O, k: usize, m: usize, opts: &EigenOptions) -> Result<EigenSystem> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = norm2(&start);
    start.iter_mut().for_each(|x| *x /= s);
    basis.push(start);

    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut w = vec![0.0; n];
    let mut matvecs = 0usize;
    let mut anorm: f64 = 0.0;

    loop {
        // Extend the basis to m vectors; basis[m] holds the residual direction.
        let mut beta = 0.0;
        for j in basis.len() - 1..m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let mut h = vec![0.0; j + 1];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let c = dot(v, &w);
                    h[i] += c;
                    axpy(-c, v, &mut w);
                }
            }
            for (i, &hi) in h.iter().enumerate() {
                t[(i, j)] = hi;
                t[(j, i)] = hi;
            }
            anorm = anorm.max(h[j].abs());
            beta = norm2(&w);
            if beta <= 1e-12 * anorm.max(f64::MIN_POSITIVE) {
                // Invariant subspace: continue from a fresh orthogonal direction.
                beta = 0.0;
                let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                for _ in 0..2 {
                    for v in basis.iter().take(j + 1) {
                        let c = dot(v, &r);
                        axpy(-c, v, &mut r);
                    }
                }
                let rn = norm2(&r);
                r.iter_mut().for_each(|x| *x /= rn);
                basis.push(r);
            } else {
                basis.push(w.iter().map(|x| x / beta).collect());
            }
            if j + 1 < m {
                t[(j + 1, j)] = beta;
                t[(j, j + 1)] = beta;
            }
        }

        let eig = SymmetricEigen::new(t.clone());
        let theta: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let order = magnitude_order(&theta);
        anorm = anorm.max(theta[order[0]].abs());
        let resid = |c: usize| beta * eig.eigenvectors[(m - 1, c)].abs();
        let worst = order[..k].iter().map(|&c| resid(c)).fold(0.0, f64::max);
        let converged = worst <= opts.tol * anorm;

        if converged || matvecs >= opts.max_matvecs {
            if !converged {
                return Err(Error::Solver {
                    iterations: matvecs,
                    residual: worst,
                });
            }
            let mut values = Vec::with_capacity(k);
            let mut vectors = Array2::zeros((n, k));
            let mut x = vec![0.0; n];
            for (c, &src) in order[..k].iter().enumerate() {
                x.iter_mut().for_each(|v| *v = 0.0);
                for (i, v) in basis.iter().enumerate().take(m) {
                    axpy(eig.eigenvectors[(i, src)], v, &mut x);
                }
                let xn = norm2(&x);
                x.iter_mut().for_each(|v| *v /= xn);
                fix_sign(&mut x);
                for (i, v) in x.iter().enumerate() {
                    vectors[[i, c]] = *v;
                }
                values.push(theta[src]);
            }
            log::debug!("lanczos converged: k={k} m={m} matvecs={matvecs} residual={worst:e}");
            return EigenSystem::new(values, vectors);
        }

        // Thick restart: keep the leading Ritz vectors plus the residual direction.
        let keep = (k + (m - k) / 2).min(m - 1);
        let residual_dir = basis.pop().expect("residual direction");
        let mut kept = Vec::with_capacity(m + 1);
        for &src in &order[..keep] {
            let mut x = vec![0.0; n];
            for (i, v) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(i, src)], v, &mut x);
            }
            kept.push(x);
        }
        t.fill(0.0);
        for (c, &src) in order[..keep].iter().enumerate() {
            t[(c, c)] = theta[src];
            let coupling = beta * eig.eigenvectors[(m - 1, src)];
            t[(keep, c)] = coupling;
            t[(c, keep)] = coupling;
        }
        kept.push(residual_dir);
        basis = kept;
    }
}
