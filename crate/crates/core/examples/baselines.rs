//! Landmark baselines (volume-weighted Nystrom and centroid interpolation)
//! scored against the exact map.

use cfdm::align::align_embeddings;
use cfdm::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use cfdm::datasets::generate_swiss_roll;
use cfdm::eigen::EigenOptions;
use cfdm::kernel::{default_epsilon, DEFAULT_BANDWIDTH_NEIGHBORS};
use cfdm::pipeline::{exact_map, MapParams};

fn main() -> cfdm::Result<()> {
    let data = generate_swiss_roll(2000, 0.0, 2)?.data;
    let epsilon = default_epsilon(&data, DEFAULT_BANDWIDTH_NEIGHBORS)?;
    let k = 8;
    let exact = exact_map(
        &data,
        &MapParams {
            epsilon,
            neighbors: None,
            t: 1.0,
            k,
        },
        &EigenOptions::default(),
    )?;
    for method in [BaselineMethod::Nystrom, BaselineMethod::CentroidInterp] {
        let cfg = BaselineConfig {
            method,
            n_landmarks: 150,
            epsilon,
            neighbors: Some(10),
            t: 1.0,
            k,
            seed: 0,
            uniform_volume: false,
        };
        let out = run_baseline(&data, &cfg)?;
        let (report, _) = align_embeddings(&exact.embedding, &out.embedding)?;
        println!(
            "{method:?}: {:.3} s, {} k-means iterations, SSE {:.4}, warnings {:?}",
            out.phases.values().sum::<f64>(),
            out.clusters.iterations,
            report.total_sse,
            out.warnings
        );
    }
    Ok(())
}
