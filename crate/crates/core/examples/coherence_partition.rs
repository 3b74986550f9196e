//! Coherence-weighted centroid sampling and angular assignment on a Swiss
//! roll, with the locality diagnostic of the resulting regions.

use cfdm::datasets::generate_swiss_roll;
use cfdm::kernel::{build_gaussian_kernel, symmetric_affinity};
use cfdm::partition::{coherence_partition, diffusion_coherence, partition_locality_diagnostic};

fn main() -> cfdm::Result<()> {
    let data = generate_swiss_roll(800, 0.0, 5)?.data;
    let g = build_gaussian_kernel(&data, 4.0, Some(10))?;
    let affinity = symmetric_affinity(&g, g.degrees())?;

    let rho = diffusion_coherence(&affinity, 2);
    let (lo, hi) = rho
        .values()
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    println!(
        "coherence at t=2: min {lo:.4}, max {hi:.4}, sum {:.3}",
        rho.values().iter().sum::<f64>()
    );

    let partition = coherence_partition(&affinity, 40, 2, 11)?;
    let sizes = partition.sizes();
    println!(
        "{} regions, sizes {}..{}",
        partition.n_regions(),
        sizes.iter().min().unwrap_or(&0),
        sizes.iter().max().unwrap_or(&0)
    );

    let diag = partition_locality_diagnostic(&affinity, &partition)?;
    let worst = diag
        .xi
        .iter()
        .zip(&diag.max_intra_distance)
        .map(|(xi, d)| d / (2.0 * xi * (data.n() as f64).sqrt()))
        .fold(0.0, f64::max);
    println!(
        "locality bound holds: {} (worst ratio {worst:.3})",
        diag.bound_holds(data.n())
    );
    Ok(())
}
