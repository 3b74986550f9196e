//! Matching embedding components up to order and sign, and scoring the
//! residual error.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// Standard deviation below which a component is treated as constant.
const ZERO_VARIANCE: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// `permutation[j]` is the candidate column matched to reference column `j`.
    pub permutation: Vec<usize>,
    pub signs: Vec<f64>,
    pub per_point_error: Vec<f64>,
    pub total_sse: f64,
    /// `total_sse / n`.
    pub total_mse: f64,
    /// Reference columns with zero variance, matched without a correlation.
    pub degenerate_reference: Vec<usize>,
    /// Candidate columns with zero variance.
    pub degenerate_candidate: Vec<usize>,
}

impl AlignmentReport {
    pub fn has_degenerate_components(&self) -> bool {
        !self.degenerate_reference.is_empty() || !self.degenerate_candidate.is_empty()
    }
}

/// Minimum-cost assignment of each row to a distinct column of a
/// `rows × cols` cost matrix with `rows ≤ cols`. Returns the column of each
/// row. Shortest augmenting paths with dual potentials, `O(rows² cols)`.
pub fn hungarian(cost: &Array2<f64>) -> Result<Vec<usize>> {
    let (n, m) = cost.dim();
    if n > m {
        return Err(Error::Dimension(format!("cannot assign {n} rows to {m} columns")));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Input("assignment cost must be finite".into()));
    }
    // 1-based arrays; row/column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    Ok(assignment)
}

fn centered(col: ArrayView1<f64>) -> (Vec<f64>, f64) {
    let mean = col.sum() / col.len() as f64;
    let c: Vec<f64> = col.iter().map(|v| v - mean).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    (c, norm)
}

/// Aligns `candidate` to `reference` by Pearson-correlation matching and
/// returns the report and the aligned candidate (reference column order).
pub fn align_coordinates(reference: &Array2<f64>, candidate: &Array2<f64>) -> Result<(AlignmentReport, Array2<f64>)> {
    let (n, k) = reference.dim();
    if candidate.nrows() != n {
        return Err(Error::Dimension(format!(
            "reference has {n} rows, candidate has {}",
            candidate.nrows()
        )));
    }
    if candidate.ncols() < k {
        return Err(Error::Dimension(format!(
            "candidate has {} components, reference needs {k}",
            candidate.ncols()
        )));
    }
    if n == 0 || k == 0 {
        return Err(Error::Input("nothing to align".into()));
    }
    let refs: Vec<_> = reference.columns().into_iter().map(centered).collect();
    let cands: Vec<_> = candidate.columns().into_iter().map(centered).collect();
    let degenerate_reference: Vec<usize> = (0..k).filter(|&j| !(refs[j].1 > ZERO_VARIANCE)).collect();
    let degenerate_candidate: Vec<usize> = (0..cands.len()).filter(|&j| !(cands[j].1 > ZERO_VARIANCE)).collect();

    let mut corr = Array2::zeros((k, cands.len()));
    for (i, (rc, rn)) in refs.iter().enumerate() {
        for (j, (cc, cn)) in cands.iter().enumerate() {
            if *rn > ZERO_VARIANCE && *cn > ZERO_VARIANCE {
                let c: f64 = rc.iter().zip(cc).map(|(a, b)| a * b).sum();
                corr[[i, j]] = (c / (rn * cn)).clamp(-1.0, 1.0);
            }
        }
    }
    let cost = corr.mapv(|c: f64| -c.abs());
    let permutation = hungarian(&cost)?;
    let signs: Vec<f64> = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| if corr[[i, j]] < 0.0 { -1.0 } else { 1.0 })
        .collect();

    let mut aligned = Array2::zeros((n, k));
    for (i, (&j, &s)) in permutation.iter().zip(&signs).enumerate() {
        for x in 0..n {
            aligned[[x, i]] = s * candidate[[x, j]];
        }
    }
    let per_point_error: Vec<f64> = (0..n)
        .map(|x| (0..k).map(|i| (reference[[x, i]] - aligned[[x, i]]).powi(2)).sum())
        .collect();
    let total_sse: f64 = per_point_error.iter().sum();
    let report = AlignmentReport {
        permutation,
        signs,
        per_point_error,
        total_sse,
        total_mse: total_sse / n as f64,
        degenerate_reference,
        degenerate_candidate,
    };
    Ok((report, aligned))
}

/// Aligns two embeddings of the same subjects.
pub fn align_embeddings(reference: &Embedding, candidate: &Embedding) -> Result<(AlignmentReport, Array2<f64>)> {
    if reference.count() != candidate.count() {
        return Err(Error::Dimension(format!(
            "reference embeds {} subjects, candidate {}",
            reference.count(),
            candidate.count()
        )));
    }
    align_coordinates(reference.coordinates(), candidate.coordinates())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hungarian_small_cases() {
        let c = array![[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let a = hungarian(&c).unwrap();
        let total: f64 = a.iter().enumerate().map(|(i, &j)| c[[i, j]]).sum();
        assert_eq!(total, 5.0);
        let rect = array![[1.0, 0.0, 3.0], [0.0, 2.0, 3.0]];
        assert_eq!(hungarian(&rect).unwrap(), vec![1, 0]);
        assert!(hungarian(&array![[1.0], [2.0]]).is_err());
    }

    #[test]
    fn recovers_permutation_and_signs() {
        let r = array![[1.0, 0.0, 2.0], [2.0, 1.0, -1.0], [0.0, 3.0, 0.5], [-1.0, 1.5, 0.0]];
        let mut c = Array2::zeros((4, 3));
        for x in 0..4 {
            c[[x, 0]] = -r[[x, 2]];
            c[[x, 1]] = r[[x, 0]];
            c[[x, 2]] = -r[[x, 1]];
        }
        let (rep, aligned) = align_coordinates(&r, &c).unwrap();
        assert_eq!(rep.permutation, vec![1, 2, 0]);
        assert_eq!(rep.signs, vec![1.0, -1.0, -1.0]);
        assert_eq!(rep.total_sse, 0.0);
        assert_eq!(aligned, r);
    }

    #[test]
    fn offset_in_one_component() {
        let r = array![[1.0, 0.0], [2.0, 1.0], [0.0, 3.0], [-1.0, 1.5], [0.5, -2.0]];
        let delta = 0.125;
        let mut c = r.clone();
        c.column_mut(1).mapv_inplace(|v| v + delta);
        let (rep, _) = align_coordinates(&r, &c).unwrap();
        assert_eq!(rep.permutation, vec![0, 1]);
        assert!((rep.total_sse - 5.0 * delta * delta).abs() < 1e-15);
        assert!((rep.total_mse - delta * delta).abs() < 1e-15);
    }

    #[test]
    fn constant_component_is_flagged() {
        let r = array![[1.0, 2.0], [2.0, 2.0], [3.0, 2.0]];
        let (rep, _) = align_coordinates(&r, &r).unwrap();
        assert_eq!(rep.degenerate_reference, vec![1]);
        assert_eq!(rep.degenerate_candidate, vec![1]);
        assert!(rep.has_degenerate_components());
        assert_eq!(rep.total_sse, 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let r = Array2::<f64>::zeros((3, 2));
        assert!(align_coordinates(&r, &Array2::zeros((3, 1))).is_err());
        assert!(align_coordinates(&r, &Array2::zeros((4, 2))).is_err());
    }
}
