//! Compressed diffusion map against the exact map on a 4096-point roll:
//! runtime per phase and aligned error.

use cfdm::align::align_embeddings;
use cfdm::datasets::generate_swiss_roll;
use cfdm::eigen::EigenOptions;
use cfdm::kernel::{default_epsilon, DEFAULT_BANDWIDTH_NEIGHBORS};
use cfdm::pipeline::{cfdm_map, exact_map, CfdmConfig, MapParams};

fn main() -> cfdm::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4096);
    let data = generate_swiss_roll(n, 0.0, 0)?.data;
    let epsilon = default_epsilon(&data, DEFAULT_BANDWIDTH_NEIGHBORS)?;
    let eigen = EigenOptions::default();

    let exact = exact_map(
        &data,
        &MapParams {
            epsilon,
            neighbors: None,
            t: 1.0,
            k: 32,
        },
        &eigen,
    )?;
    let cfg = CfdmConfig {
        map: MapParams {
            epsilon,
            neighbors: Some(10),
            t: 1.0,
            k: 32,
        },
        n_partitions: 150,
        partition_t: 1,
        seed: 0,
    };
    let compressed = cfdm_map(&data, &cfg, &eigen)?;
    let (report, _) = align_embeddings(&exact.embedding, &compressed.embedding)?;

    println!("n = {n}, epsilon = {epsilon:.4}");
    println!("exact: {:.3} s {:?}", exact.total_seconds(), exact.phases);
    println!("cfdm:  {:.3} s {:?}", compressed.total_seconds(), compressed.phases);
    println!("speed-up {:.1}x", exact.total_seconds() / compressed.total_seconds());
    println!("aligned SSE {:.4}, MSE {:.3e}", report.total_sse, report.total_mse);
    Ok(())
}
