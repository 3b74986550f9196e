//! Round trip through CSV: write points, load them back, embed and save the
//! coordinates.

use cfdm::datasets::{embedding_header, generate_swiss_roll, load_dataset, save_matrix};
use cfdm::eigen::EigenOptions;
use cfdm::kernel::{default_epsilon, DEFAULT_BANDWIDTH_NEIGHBORS};
use cfdm::pipeline::{cfdm_map, CfdmConfig, MapParams};

fn main() -> cfdm::Result<()> {
    let dir = std::env::temp_dir().join("cfdm_csv_example");
    std::fs::create_dir_all(&dir)?;
    let points = dir.join("points.csv");
    let roll = generate_swiss_roll(1000, 0.05, 9)?;
    let header: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    save_matrix(&points, roll.data.values(), Some(&header))?;

    let data = load_dataset(&points)?;
    assert_eq!(data, roll.data);
    let cfg = CfdmConfig {
        map: MapParams {
            epsilon: default_epsilon(&data, DEFAULT_BANDWIDTH_NEIGHBORS)?,
            neighbors: Some(10),
            t: 1.0,
            k: 6,
        },
        n_partitions: 100,
        partition_t: 1,
        seed: 4,
    };
    let out = cfdm_map(&data, &cfg, &EigenOptions::default())?;
    let path = dir.join("embedding.csv");
    save_matrix(&path, out.embedding.coordinates(), Some(&embedding_header(cfg.map.k)))?;
    println!("embedded {} points into {}", data.n(), path.display());
    Ok(())
}
