//! End-to-end runs of the `cfdm` binary.

use std::path::Path;
use std::process::{Command, Output};

use cfdm::align::align_embeddings;
use cfdm::datasets::{load_dataset, read_matrix_csv};
use cfdm::eigen::EigenOptions;
use cfdm::kernel::{default_epsilon, DEFAULT_BANDWIDTH_NEIGHBORS};
use cfdm::pipeline::{cfdm_map, exact_map, CfdmConfig, MapParams};
use serde_json::Value;

fn cfdm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfdm"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = cfdm(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn matrix(path: &Path) -> ndarray::Array2<f64> {
    read_matrix_csv(std::fs::File::open(path).unwrap()).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(d, &["generate", "--n", "100", "--seed", "7", "--out", "a.csv"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("100"));
    ok(d, &["generate", "--n", "100", "--seed", "7", "--out", "b.csv"]);
    assert_eq!(matrix(&d.join("a.csv")).dim(), (100, 3));
    assert_eq!(
        std::fs::read(d.join("a.csv")).unwrap(),
        std::fs::read(d.join("b.csv")).unwrap()
    );
    ok(
        d,
        &[
            "generate", "--n", "50", "--noise", "0.05", "--seed", "7", "--out", "c.csv",
        ],
    );
    ok(
        d,
        &[
            "generate", "--n", "50", "--noise", "0.05", "--seed", "7", "--out", "e.csv",
        ],
    );
    assert_eq!(
        std::fs::read(d.join("c.csv")).unwrap(),
        std::fs::read(d.join("e.csv")).unwrap()
    );
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cfdm(d, &["generate", "--n", "0", "--out", "x.csv"])), 2);
    assert_eq!(
        code(&cfdm(d, &["generate", "--n", "5", "--out", "x.csv", "--bogus"])),
        2
    );
    assert_eq!(code(&cfdm(d, &["embed", "--method", "exact", "--out", "x.csv"])), 2);
    assert_eq!(
        code(&cfdm(
            d,
            &["embed", "--method", "magic", "--input", "p.csv", "--out", "x.csv"]
        )),
        2
    );
    assert_eq!(code(&cfdm(d, &["benchmark", "--out-dir", "o"])), 2);
    assert_eq!(
        code(&cfdm(
            d,
            &["benchmark", "--out-dir", "o", "--input", "p.csv", "--n", "5"]
        )),
        2
    );
    assert_eq!(code(&cfdm(d, &[])), 2);
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = cfdm(
        d,
        &["embed", "--method", "exact", "--input", "missing.csv", "--out", "x.csv"],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    std::fs::write(d.join("ragged.csv"), "1,2\n3\n").unwrap();
    let out = cfdm(
        d,
        &["embed", "--method", "exact", "--input", "ragged.csv", "--out", "x.csv"],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn help_documents_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 4] = [
        ("generate", &["--n", "--noise", "--seed", "--out"]),
        (
            "embed",
            &[
                "--method",
                "--input",
                "--partitions",
                "--components",
                "--t",
                "--epsilon",
                "--knn",
                "--seed",
                "--out",
                "--region-out",
            ],
        ),
        (
            "benchmark",
            &[
                "--config",
                "--out-dir",
                "--methods",
                "--partitions",
                "--repeats",
                "--grid-n",
            ],
        ),
        ("evaluate", &["--reference", "--candidate", "--out"]),
    ];
    for (sub, flags) in cases {
        let out = ok(dir.path(), &[sub, "--help"]);
        let text = String::from_utf8_lossy(&out.stdout);
        for flag in flags {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }
}

#[test]
fn embed_writes_coordinates_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--n", "200", "--seed", "3", "--out", "p.csv"]);
    let out = ok(
        d,
        &[
            "embed",
            "--method",
            "exact",
            "--input",
            "p.csv",
            "--components",
            "8",
            "--out",
            "e.csv",
        ],
    );
    assert_eq!(matrix(&d.join("e.csv")).dim(), (200, 8));
    let meta = json(&d.join("e.json"));
    assert_eq!(meta["method"], "exact");
    assert_eq!(meta["eigenvalues"].as_array().unwrap().len(), 8);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.lines().any(|l| l.starts_with("phase=eigensolve seconds=")));
    for method in ["nystrom", "centroid-interp", "cfdm"] {
        ok(
            d,
            &[
                "embed",
                "--method",
                method,
                "--input",
                "p.csv",
                "--components",
                "4",
                "--partitions",
                "30",
                "--knn",
                "10",
                "--out",
                &format!("{method}.csv"),
            ],
        );
        assert_eq!(matrix(&d.join(format!("{method}.csv"))).dim(), (200, 4));
    }
}

#[test]
fn singleton_cfdm_matches_two_step_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--n", "200", "--seed", "4", "--out", "p.csv"]);
    ok(
        d,
        &[
            "embed",
            "--method",
            "two-step",
            "--input",
            "p.csv",
            "--components",
            "8",
            "--out",
            "two.csv",
        ],
    );
    ok(
        d,
        &[
            "embed",
            "--method",
            "cfdm",
            "--input",
            "p.csv",
            "--components",
            "8",
            "--partitions",
            "200",
            "--out",
            "c.csv",
            "--region-out",
            "r.csv",
        ],
    );
    let out = ok(
        d,
        &[
            "evaluate",
            "--reference",
            "two.csv",
            "--candidate",
            "r.csv",
            "--out",
            "rep.json",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("sse="));
    let sse = json(&d.join("rep.json"))["total_sse"].as_f64().unwrap();
    assert!(sse <= 1e-8 * 200.0, "{sse}");
}

#[test]
fn evaluate_recovers_permutations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("a.csv"), "phi_1,phi_2,phi_3\n1,0,2\n2,1,-1\n0,3,0.5\n-1,1.5,0\n").unwrap();
    std::fs::write(
        d.join("b.csv"),
        "phi_1,phi_2,phi_3\n-2,1,0\n1,2,-1\n-0.5,0,-3\n0,-1,-1.5\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "evaluate",
            "--reference",
            "a.csv",
            "--candidate",
            "a.csv",
            "--out",
            "same.json",
        ],
    );
    assert_eq!(json(&d.join("same.json"))["total_sse"], 0.0);
    ok(
        d,
        &[
            "evaluate",
            "--reference",
            "a.csv",
            "--candidate",
            "b.csv",
            "--out",
            "perm.json",
        ],
    );
    let rep = json(&d.join("perm.json"));
    assert_eq!(rep["total_sse"], 0.0);
    assert_eq!(rep["permutation"], serde_json::json!([1, 2, 0]));
    assert_eq!(rep["signs"], serde_json::json!([1.0, -1.0, -1.0]));
    assert_eq!(rep["per_point_error"].as_array().unwrap().len(), 4);
    std::fs::write(d.join("short.csv"), "1,2,3\n").unwrap();
    assert_eq!(
        code(&cfdm(
            d,
            &["evaluate", "--reference", "a.csv", "--candidate", "short.csv"]
        )),
        1
    );
}

#[test]
fn evaluate_agrees_with_library() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--n", "300", "--seed", "5", "--out", "p.csv"]);
    ok(
        d,
        &[
            "embed",
            "--method",
            "exact",
            "--input",
            "p.csv",
            "--components",
            "6",
            "--out",
            "exact.csv",
        ],
    );
    ok(
        d,
        &[
            "embed",
            "--method",
            "cfdm",
            "--input",
            "p.csv",
            "--components",
            "6",
            "--partitions",
            "40",
            "--knn",
            "10",
            "--seed",
            "2",
            "--out",
            "cfdm.csv",
        ],
    );
    ok(
        d,
        &[
            "evaluate",
            "--reference",
            "exact.csv",
            "--candidate",
            "cfdm.csv",
            "--out",
            "rep.json",
        ],
    );
    let cli_sse = json(&d.join("rep.json"))["total_sse"].as_f64().unwrap();

    let data = load_dataset(d.join("p.csv")).unwrap();
    let epsilon = default_epsilon(&data, DEFAULT_BANDWIDTH_NEIGHBORS).unwrap();
    let eigen = EigenOptions::default();
    let exact = exact_map(
        &data,
        &MapParams {
            epsilon,
            neighbors: None,
            t: 1.0,
            k: 6,
        },
        &eigen,
    )
    .unwrap();
    let cfg = CfdmConfig {
        map: MapParams {
            epsilon,
            neighbors: Some(10),
            t: 1.0,
            k: 6,
        },
        n_partitions: 40,
        partition_t: 1,
        seed: 2,
    };
    let compressed = cfdm_map(&data, &cfg, &eigen).unwrap();
    let (report, _) = align_embeddings(&exact.embedding, &compressed.embedding).unwrap();
    assert_eq!(cli_sse, report.total_sse);
}

#[test]
fn benchmark_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.json"),
        r#"{"dataset": {"kind": "swiss_roll", "n": 300, "seed": 1}, "methods": ["exact"], "k": 5}"#,
    )
    .unwrap();
    let out = ok(d, &["benchmark", "--config", "cfg.json", "--out-dir", "one"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("method=exact phase=kernel seconds="));
    let rec = json(&d.join("one/record_000.json"));
    assert_eq!(rec["k"], 5);
    let csv = std::fs::read_to_string(d.join("one/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    ok(
        d,
        &[
            "benchmark",
            "--config",
            "cfg.json",
            "--out-dir",
            "two",
            "--components",
            "3",
            "--methods",
            "exact,cfdm",
            "--partitions",
            "30",
            "--grid-n",
            "200,250",
        ],
    );
    for (i, n) in [(0, 200), (1, 250)] {
        let rec = json(&d.join(format!("two/record_{i:03}.json")));
        assert_eq!(
            (rec["k"].as_u64(), rec["n"].as_u64(), rec["n_partitions"].as_u64()),
            (Some(3), Some(n), Some(30))
        );
        assert!(rec["methods"][1]["sse"].as_f64().is_some());
    }
}

#[test]
fn benchmark_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = "{\"dataset\": {\"kind\": \"swiss_roll\", \"n\": 64},\n \"methods\": [\"exact\" \"cfdm\"]}";
    std::fs::write(d.join("bad.json"), text).unwrap();
    let out = cfdm(d, &["benchmark", "--config", "bad.json", "--out-dir", "o"]);
    assert_eq!(code(&out), 2);
    let offset = text.find(" \"cfdm\"").unwrap() + 1;
    assert!(
        String::from_utf8_lossy(&out.stderr).contains(&format!("byte {offset}")),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    std::fs::write(
        d.join("schema.json"),
        r#"{"dataset": {"kind": "swiss_roll", "n": 64}, "methods": ["exact"], "n_partitions": -3}"#,
    )
    .unwrap();
    let out = cfdm(d, &["benchmark", "--config", "schema.json", "--out-dir", "o"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_partitions"));
}
