//! The inverse-density kernel K = G diag(1/q) G keeps the Gaussian degrees,
//! normalizes to the two-step walk P^2 and is no larger in spectral norm.

use cfdm::datasets::generate_swiss_roll;
use cfdm::eigen::dense_symmetric_eigen;
use cfdm::kernel::{build_gaussian_kernel, build_idmgc_kernel, markov_normalize};

fn spectral_norm(m: &ndarray::Array2<f64>) -> cfdm::Result<f64> {
    let eig = dense_symmetric_eigen(m)?;
    Ok(eig.eigenvalues().iter().fold(0.0_f64, |a, l| a.max(l.abs())))
}

fn main() -> cfdm::Result<()> {
    let data = generate_swiss_roll(200, 0.1, 3)?.data;
    let g = build_gaussian_kernel(&data, 6.0, None)?;
    let k = build_idmgc_kernel(&g, g.degrees())?;

    let degree_err = g
        .degrees()
        .iter()
        .zip(k.degrees().iter())
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max);
    println!("max relative degree error  = {degree_err:.2e}");

    let p = markov_normalize(&g)?.to_dense();
    let p2 = p.dot(&p);
    let pk = markov_normalize(&k)?.to_dense();
    let step_err = (&pk - &p2).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    println!("max |P_K - P^2|            = {step_err:.2e}");

    let (ng, nk) = (
        spectral_norm(&g.weights().to_dense())?,
        spectral_norm(&k.weights().to_dense())?,
    );
    println!("||G|| = {ng:.6}, ||K|| = {nk:.6}");
    Ok(())
}
