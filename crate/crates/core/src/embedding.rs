//! Diffusion coordinates from eigenpairs of a symmetric affinity, at point or
//! region level, plus interpolation of region coordinates to points.

use ndarray::Array2;

use crate::compression::CompressedOperators;
use crate::eigen::{eigendecompose_with, EigenOptions, EigenSystem};
use crate::error::{Error, Result};
use crate::kernel::DegreeVector;
use crate::linalg::CsrMatrix;

/// Largest allowed `|λ_0 − 1|` before the kernel is treated as broken.
pub const LEADING_EIGENVALUE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Points,
    Regions,
}

/// Coordinates `λ_jᵗ φ_j` for `j = 1..=k`, one row per point or region.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coordinates: Array2<f64>,
    eigenvalues: Vec<f64>,
    t: f64,
    subject: Subject,
}

impl Embedding {
    pub fn new(coordinates: Array2<f64>, eigenvalues: Vec<f64>, t: f64, subject: Subject) -> Result<Self> {
        if coordinates.ncols() == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        if coordinates.ncols() != eigenvalues.len() {
            return Err(Error::Dimension(format!(
                "{} coordinate columns for {} eigenvalues",
                coordinates.ncols(),
                eigenvalues.len()
            )));
        }
        Ok(Embedding {
            coordinates,
            eigenvalues,
            t,
            subject,
        })
    }

    pub fn coordinates(&self) -> &Array2<f64> {
        &self.coordinates
    }

    pub fn into_coordinates(self) -> Array2<f64> {
        self.coordinates
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn subject(&self) -> Subject {
        self.subject
    }

    /// Number of embedded points or regions.
    pub fn count(&self) -> usize {
        self.coordinates.nrows()
    }

    pub fn k(&self) -> usize {
        self.coordinates.ncols()
    }

    /// Rows `indices` of this embedding, in the given order.
    pub fn select_rows(&self, indices: &[usize], subject: Subject) -> Result<Embedding> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.count()) {
            return Err(Error::Dimension(format!(
                "row {i} out of range for {} rows",
                self.count()
            )));
        }
        let coords = self.coordinates.select(ndarray::Axis(0), indices);
        Embedding::new(coords, self.eigenvalues.clone(), self.t, subject)
    }
}

/// `λᵗ`, defined for negative `λ` only at integer `t`.
pub(crate) fn eigen_power(lambda: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param(
            "t",
            format!("must be a finite non-negative number, got {t}"),
        ));
    }
    if t.fract() == 0.0 && t <= i32::MAX as f64 {
        Ok(lambda.powi(t as i32))
    } else if lambda >= 0.0 {
        Ok(lambda.powf(t))
    } else {
        Err(Error::Spectrum(format!(
            "negative eigenvalue {lambda} has no real power at fractional t = {t}"
        )))
    }
}

/// Diffusion map from eigenpairs of `diag(q^-1/2) W diag(q^-1/2)`.
///
/// Column `j` is `λ_jᵗ φ_j` with `φ_j = ψ_j / sqrt(q)` scaled to unit
/// `q`-weighted norm. The constant component 0 is dropped.
pub fn diffusion_map(eigs: &EigenSystem, q: &DegreeVector, t: f64, k: usize) -> Result<Embedding> {
    map_from_eigs(eigs, q, t, k, Subject::Points)
}

fn map_from_eigs(eigs: &EigenSystem, q: &[f64], t: f64, k: usize, subject: Subject) -> Result<Embedding> {
    let n = eigs.n();
    if q.len() != n {
        return Err(Error::Dimension(format!(
            "{} degrees for {n} eigenvector entries",
            q.len()
        )));
    }
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if eigs.k() < k + 1 {
        return Err(Error::param(
            "k",
            format!("{k} components need {} eigenpairs, have {}", k + 1, eigs.k()),
        ));
    }
    let lambda0 = eigs.eigenvalues()[0];
    if (lambda0 - 1.0).abs() > LEADING_EIGENVALUE_TOLERANCE {
        return Err(Error::Spectrum(format!(
            "leading eigenvalue {lambda0} is not 1; the kernel graph may be disconnected"
        )));
    }
    let inv_sqrt_q: Vec<f64> = q.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut coords = Array2::zeros((n, k));
    let mut values = Vec::with_capacity(k);
    for j in 1..=k {
        let lambda = eigs.eigenvalues()[j];
        let psi = eigs.vector(j);
        let phi: Vec<f64> = psi.iter().zip(&inv_sqrt_q).map(|(p, s)| p * s).collect();
        let weighted: f64 = phi.iter().zip(q).map(|(f, w)| w * f * f).sum();
        let scale = eigen_power(lambda, t)? / weighted.sqrt();
        for (i, f) in phi.iter().enumerate() {
            coords[[i, j - 1]] = f * scale;
        }
        values.push(lambda);
    }
    Embedding::new(coords, values, t, subject)
}

/// Region-level map from the compressed kernel, through its symmetric
/// conjugate `diag(d_S^-1/2) K_S diag(d_S^-1/2)`.
pub fn compressed_diffusion_map(ops: &CompressedOperators, t: f64, k: usize) -> Result<Embedding> {
    compressed_diffusion_map_with(ops, t, k, &EigenOptions::default())
}

pub fn compressed_diffusion_map_with(
    ops: &CompressedOperators,
    t: f64,
    k: usize,
    opts: &EigenOptions,
) -> Result<Embedding> {
    let n_regions = ops.degrees.len();
    if k >= n_regions {
        return Err(Error::param(
            "k",
            format!("must be smaller than the number of regions ({n_regions}), got {k}"),
        ));
    }
    let s: Vec<f64> = ops.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut sym = ops.kernel.clone();
    for ((i, j), v) in sym.indexed_iter_mut() {
        *v *= s[i] * s[j];
    }
    let eigs = eigendecompose_with(&sym, k + 1, opts)?;
    map_from_eigs(&eigs, &ops.degrees, t, k, Subject::Regions)
}

/// `interp · region coordinates`, giving one row per point.
pub fn interpolate_embedding(regions: &Embedding, interp: &CsrMatrix) -> Result<Embedding> {
    if regions.subject() != Subject::Regions {
        return Err(Error::param("regions", "embedding must be over regions"));
    }
    if interp.ncols() != regions.count() {
        return Err(Error::Dimension(format!(
            "interpolation has {} columns for {} regions",
            interp.ncols(),
            regions.count()
        )));
    }
    let coords = interp.matmul_dense(regions.coordinates());
    Embedding::new(coords, regions.eigenvalues.clone(), regions.t, Subject::Points)
}
