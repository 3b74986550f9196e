//! Benchmark harness records, sweeps and result files.

use cfdm::bench::{
    load_config, read_record, run_experiment, sweep, write_results, ExperimentConfig, Method, ResultRecord, SweepGrid,
};

fn small(n: usize, methods: Vec<Method>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::swiss_roll(n, methods);
    cfg.k = 6;
    cfg.n_partitions = 40;
    cfg
}

#[test]
fn records_round_trip_through_json() {
    let mut cfg = small(300, Method::ALL.to_vec());
    cfg.store_embeddings = true;
    let records = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_results(dir.path(), &records).unwrap();
    assert_eq!(files.len(), 2);
    let back = read_record(&files[0]).unwrap();
    assert_eq!(back, records[0]);
    let text = serde_json::to_string(&records[0]).unwrap();
    for field in [
        "config",
        "method",
        "phase_seconds",
        "total_seconds",
        "sse",
        "mse",
        "k",
        "t",
        "n",
        "n_partitions",
        "seed",
        "metadata",
    ] {
        assert!(text.contains(&format!("\"{field}\"")), "missing {field}");
    }
}

#[test]
fn sse_only_with_exact_reference() {
    let rec = &run_experiment(&small(200, vec![Method::Cfdm, Method::Nystrom])).unwrap()[0];
    assert!(rec.methods.iter().all(|m| m.sse.is_none() && m.error.is_none()));
    let rec = &run_experiment(&small(200, vec![Method::Nystrom, Method::Exact])).unwrap()[0];
    assert_eq!(rec.methods[0].method, Method::Exact);
    let ny = rec.method(Method::Nystrom).unwrap();
    assert!(ny.sse.unwrap() >= 0.0);
    assert_eq!(ny.per_point_error.as_ref().unwrap().len(), 200);
    assert!((ny.mse.unwrap() - ny.sse.unwrap() / 200.0).abs() < 1e-15);
    for m in &rec.methods {
        assert!(m.phase_seconds.values().all(|&s| s >= 0.0));
    }
}

#[test]
fn repeats_are_independent_seeded_records() {
    let mut cfg = small(150, vec![Method::Exact, Method::Cfdm]);
    cfg.repeats = 3;
    cfg.store_embeddings = true;
    let recs = run_experiment(&cfg).unwrap();
    assert_eq!(recs.len(), 3);
    assert_eq!(recs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![0, 1, 2]);
    let e = |i: usize| recs[i].method(Method::Exact).unwrap().embedding.clone();
    assert_ne!(e(0), e(1));
    // Timings are the only values allowed to differ between runs.
    let strip = |recs: Vec<ResultRecord>| -> Vec<ResultRecord> {
        recs.into_iter()
            .map(|mut r| {
                for m in &mut r.methods {
                    m.phase_seconds.clear();
                    m.total_seconds = 0.0;
                }
                r
            })
            .collect()
    };
    assert_eq!(strip(recs), strip(run_experiment(&cfg).unwrap()));
}

#[test]
fn sweep_over_sizes_gives_one_record_per_cell() {
    let grid = SweepGrid {
        n: vec![1 << 10, 1 << 11],
        ..Default::default()
    };
    let records = sweep(&small(100, vec![Method::Cfdm]), &grid).unwrap();
    assert_eq!(records.iter().map(|r| r.n).collect::<Vec<_>>(), vec![1024, 2048]);
}

#[test]
fn partition_grid_reports_sse_per_cell() {
    let grid = SweepGrid {
        n_partitions: vec![50, 150, 500],
        ..Default::default()
    };
    let records = sweep(&small(1024, vec![Method::Exact, Method::Cfdm]), &grid).unwrap();
    assert_eq!(records.len(), 3);
    let dir = tempfile::tempdir().unwrap();
    write_results(dir.path(), &records).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("results.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let sse_col = headers.iter().position(|h| h == "sse").unwrap();
    let method_col = headers.iter().position(|h| h == "method").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    let cfdm_sse: Vec<f64> = rows
        .iter()
        .filter(|r| &r[method_col] == "cfdm")
        .map(|r| r[sse_col].parse().unwrap())
        .collect();
    assert_eq!(cfdm_sse.len(), 3);
}

#[test]
fn compressed_cost_grows_slower_than_exact() {
    let grid = SweepGrid {
        n: vec![1024, 4096],
        ..Default::default()
    };
    let mut base = ExperimentConfig::swiss_roll(1024, vec![Method::Exact, Method::Cfdm]);
    base.k = 16;
    let records = sweep(&base, &grid).unwrap();
    let secs = |i: usize, m: Method| records[i].method(m).unwrap().total_seconds;
    let exact_growth = secs(1, Method::Exact) / secs(0, Method::Exact);
    let cfdm_growth = secs(1, Method::Cfdm) / secs(0, Method::Cfdm);
    assert!(
        cfdm_growth < exact_growth,
        "cfdm x{cfdm_growth:.2}, exact x{exact_growth:.2}"
    );
}

#[test]
fn config_files_load_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"dataset": {"kind": "csv", "path": "points.csv"}, "methods": ["nystrom", "centroid-interp"], "neighbors": null}"#).unwrap();
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.methods, vec![Method::Nystrom, Method::CentroidInterp]);
    assert_eq!(cfg.neighbors, None);
    assert_eq!((cfg.k, cfg.n_partitions, cfg.repeats), (32, 150, 1));
    let err = load_config(dir.path().join("absent.json")).unwrap_err();
    assert!(matches!(err, cfdm::Error::Io(_)));
}
