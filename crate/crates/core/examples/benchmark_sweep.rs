//! A small runtime sweep over dataset sizes, written as JSON records and an
//! aggregate CSV.

use cfdm::bench::{sweep, write_results, ExperimentConfig, Method, SweepGrid};

fn main() -> cfdm::Result<()> {
    let mut base = ExperimentConfig::swiss_roll(1024, vec![Method::Exact, Method::Cfdm]);
    base.k = 16;
    let grid = SweepGrid {
        n: vec![1024, 2048],
        n_partitions: vec![50, 150],
        methods: Vec::new(),
    };
    let records = sweep(&base, &grid)?;
    for rec in &records {
        let exact = rec.method(Method::Exact).map_or(f64::NAN, |m| m.total_seconds);
        let cfdm = rec.method(Method::Cfdm);
        println!(
            "n={:5} partitions={:3} exact {:.3} s, cfdm {:.3} s, SSE {:.4}",
            rec.n,
            rec.n_partitions,
            exact,
            cfdm.map_or(f64::NAN, |m| m.total_seconds),
            cfdm.and_then(|m| m.sse).unwrap_or(f64::NAN)
        );
    }
    let dir = std::env::temp_dir().join("cfdm_sweep");
    let files = write_results(&dir, &records)?;
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}
