//! Exact diffusion map of a Swiss roll; the leading coordinate tracks the
//! roll angle.

use cfdm::datasets::generate_swiss_roll;
use cfdm::eigen::EigenOptions;
use cfdm::kernel::{default_epsilon, DEFAULT_BANDWIDTH_NEIGHBORS};
use cfdm::pipeline::{exact_map, MapParams};

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn main() -> cfdm::Result<()> {
    let roll = generate_swiss_roll(1500, 0.0, 1)?;
    let params = MapParams {
        epsilon: default_epsilon(&roll.data, DEFAULT_BANDWIDTH_NEIGHBORS)?,
        neighbors: None,
        t: 1.0,
        k: 4,
    };
    let out = exact_map(&roll.data, &params, &EigenOptions::default())?;
    println!("epsilon = {:.4}", params.epsilon);
    println!("eigenvalues = {:?}", out.embedding.eigenvalues());
    for j in 0..params.k {
        let phi: Vec<f64> = out.embedding.coordinates().column(j).to_vec();
        println!(
            "phi_{}: corr(u) = {:+.3}, corr(h) = {:+.3}",
            j + 1,
            pearson(&phi, &roll.u),
            pearson(&phi, &roll.h)
        );
    }
    for (phase, s) in &out.phases {
        println!("{phase}: {s:.4} s");
    }
    Ok(())
}
