//! Library results against dense reference computations.

mod common;

use cfdm::align::align_embeddings;
use cfdm::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use cfdm::bench::{run_experiment, ExperimentConfig, Method};
use cfdm::compression::{compress, compress_kernel, region_to_point_unnormalized, Partition};
use cfdm::datasets::generate_swiss_roll;
use cfdm::eigen::EigenOptions;
use cfdm::embedding::{interpolate_embedding, Embedding, Subject};
use cfdm::kernel::{
    build_gaussian_kernel, build_idmgc_kernel, default_epsilon, symmetric_affinity, DataMatrix,
    DEFAULT_BANDWIDTH_NEIGHBORS,
};
use cfdm::partition::{angular_scores, diffusion_coherence};
use cfdm::pipeline::{exact_map, two_step_map, MapParams};
use common::*;
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn eps_of(data: &DataMatrix) -> f64 {
    default_epsilon(data, DEFAULT_BANDWIDTH_NEIGHBORS).unwrap()
}

#[test]
fn gaussian_kernel_matches_formula() {
    let data = random_points(80, 4, 2.0, 1);
    let eps = eps_of(&data);
    let g = build_gaussian_kernel(&data, eps, None).unwrap();
    assert!(max_abs_diff(&g.weights().to_dense(), &gaussian(&data, eps)) < 1e-15);
}

#[test]
fn idmgc_matches_triple_sum_dense_and_truncated() {
    let data = random_points(90, 3, 1.0, 2);
    let eps = eps_of(&data);
    for neighbors in [None, Some(8)] {
        let g = build_gaussian_kernel(&data, eps, neighbors).unwrap();
        let k = build_idmgc_kernel(&g, g.degrees()).unwrap();
        let oracle = idmgc(&g.weights().to_dense());
        let scale = oracle.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        assert!(
            max_abs_diff(&k.weights().to_dense(), &oracle) <= 1e-12 * scale,
            "{neighbors:?}"
        );
    }
}

#[test]
fn compressed_kernel_is_block_sum() {
    let data = random_points(60, 3, 1.0, 3);
    let eps = eps_of(&data);
    let g = build_gaussian_kernel(&data, eps, None).unwrap();
    let k = idmgc(&gaussian(&data, eps));
    let p = random_partition(60, 5, 9);
    let z = indicator(&p);
    let oracle = z.t().dot(&k).dot(&z);
    let ks = compress_kernel(&g, g.degrees(), &p).unwrap();
    assert!(max_abs_diff(&ks, &oracle) < 1e-10);
    assert!(max_abs_diff(&ks, &ks.t().to_owned()) < 1e-12);
}

#[test]
fn compression_limits() {
    let data = random_points(40, 2, 1.0, 4);
    let eps = eps_of(&data);
    let g = build_gaussian_kernel(&data, eps, None).unwrap();
    let k = idmgc(&gaussian(&data, eps));
    let single = compress(&g, &Partition::singletons(40)).unwrap();
    assert!(max_abs_diff(&single.kernel, &k) < 1e-12);
    let p = markov(&gaussian(&data, eps));
    assert!(max_abs_diff(&single.markov, &p.dot(&p)) < 1e-12);

    let whole = compress(&g, &Partition::whole(40)).unwrap();
    let q: f64 = row_sums(&gaussian(&data, eps)).iter().sum();
    assert!((whole.kernel[[0, 0]] - q).abs() < 1e-10 * q);
    assert_eq!(whole.markov, array![[1.0]]);
    assert!(whole.interp.to_dense().iter().all(|&w| w == 1.0));
}

#[test]
fn two_point_interpolation_closed_form() {
    let eps: f64 = 0.7;
    let data = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![eps.sqrt(), 0.0]]).unwrap();
    let g = build_gaussian_kernel(&data, eps, None).unwrap();
    let w = region_to_point_unnormalized(&g, g.degrees(), &Partition::singletons(2))
        .unwrap()
        .to_dense();
    let e = (-1.0_f64).exp();
    let oracle = array![[1.0, e], [e, 1.0]] / (1.0 + e);
    assert!(max_abs_diff(&w, &oracle) < 1e-15);
}

/// Squared diffusion distance `Σ_z (P^t(x,z) − P^t(y,z))² / q(z)` equals the
/// squared Euclidean distance in the full map.
#[test]
fn full_map_distances_are_diffusion_distances() {
    let n = 70;
    let data = random_points(n, 3, 1.0, 5);
    let eps = eps_of(&data);
    let gd = gaussian(&data, eps);
    let q = row_sums(&gd);
    let p = markov(&gd);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for t in [1usize, 2] {
        let params = MapParams {
            epsilon: eps,
            neighbors: None,
            t: t as f64,
            k: n - 1,
        };
        let map = exact_map(&data, &params, &EigenOptions::default()).unwrap();
        let c = map.embedding.coordinates();
        let pt = matpow(&p, t);
        for _ in 0..50 {
            let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
            let oracle: f64 = (0..n).map(|z| (pt[[x, z]] - pt[[y, z]]).powi(2) / q[z]).sum();
            let embedded: f64 = (0..n - 1).map(|j| (c[[x, j]] - c[[y, j]]).powi(2)).sum();
            assert!(
                (oracle - embedded).abs() < 1e-8,
                "t={t} ({x},{y}): {oracle} vs {embedded}"
            );
        }
    }
}

#[test]
fn exact_eigenvalues_match_markov_spectrum() {
    let data = random_points(100, 3, 1.0, 7);
    let eps = eps_of(&data);
    let (values, _) = symmetric_eigen(&affinity(&gaussian(&data, eps)));
    let params = MapParams {
        epsilon: eps,
        neighbors: None,
        t: 1.0,
        k: 6,
    };
    let map = exact_map(&data, &params, &EigenOptions::default()).unwrap();
    for (a, b) in map.embedding.eigenvalues().iter().zip(&values[1..]) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn coherence_matches_dense_power() {
    let data = random_points(100, 3, 1.0, 8);
    let eps = eps_of(&data);
    let g = build_gaussian_kernel(&data, eps, None).unwrap();
    let aff = symmetric_affinity(&g, g.degrees()).unwrap();
    let a = affinity(&gaussian(&data, eps));
    for t in [1, 2, 3] {
        let rho = diffusion_coherence(&aff, t);
        let power = matpow(&a, 2 * t);
        for (i, r) in rho.values().iter().enumerate() {
            assert!((r - power[[i, i]]).abs() < 1e-10);
            assert!(*r > 0.0 && *r <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn angular_scores_match_dense_power() {
    let data = random_points(200, 3, 1.0, 9);
    let eps = eps_of(&data);
    let g = build_gaussian_kernel(&data, eps, Some(12)).unwrap();
    let aff = symmetric_affinity(&g, g.degrees()).unwrap();
    let a = affinity(&g.weights().to_dense());
    let centroids = vec![3, 50, 77, 120, 199];
    for t in [1, 2] {
        let scores = angular_scores(&aff, &centroids, t).unwrap();
        let power = matpow(&a, 2 * t);
        for (c, &y) in centroids.iter().enumerate() {
            for x in 0..200 {
                let oracle = power[[x, y]] / power[[y, y]].sqrt();
                assert!((scores.scores[[x, c]] - oracle).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn interpolation_stays_in_region_hull() {
    let data = random_points(120, 3, 1.0, 10);
    let eps = eps_of(&data);
    let g = build_gaussian_kernel(&data, eps, Some(10)).unwrap();
    let p = random_partition(120, 12, 11);
    let ops = compress(&g, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let region = Array2::from_shape_fn((12, 3), |_| rng.random_range(-1.0..1.0));
    let emb = Embedding::new(region.clone(), vec![1.0; 3], 1.0, Subject::Regions).unwrap();
    let out = interpolate_embedding(&emb, &ops.interp).unwrap();
    for j in 0..3 {
        let col = region.column(j);
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        for v in out.coordinates().column(j) {
            assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
    }
    let constant = Embedding::new(Array2::from_elem((12, 1), 0.3), vec![1.0], 1.0, Subject::Regions).unwrap();
    let out = interpolate_embedding(&constant, &ops.interp).unwrap();
    assert!(out.coordinates().iter().all(|&v| (v - 0.3).abs() < 1e-15));
}

fn full_landmarks(method: BaselineMethod, data: &DataMatrix, eps: f64, k: usize) -> Embedding {
    let cfg = BaselineConfig {
        method,
        n_landmarks: data.n(),
        epsilon: eps,
        neighbors: None,
        t: 1.0,
        k,
        seed: 1,
        uniform_volume: false,
    };
    run_baseline(data, &cfg).unwrap().embedding
}

#[test]
fn nystrom_with_every_point_is_exact() {
    let data = generate_swiss_roll(150, 0.0, 13).unwrap().data;
    let eps = eps_of(&data);
    let k = 6;
    let exact = exact_map(
        &data,
        &MapParams {
            epsilon: eps,
            neighbors: None,
            t: 1.0,
            k,
        },
        &EigenOptions::default(),
    )
    .unwrap();
    let ny = full_landmarks(BaselineMethod::Nystrom, &data, eps, k);
    let (report, _) = align_embeddings(&exact.embedding, &ny).unwrap();
    assert!(report.total_sse <= 1e-6 * 150.0, "{}", report.total_sse);
    for (a, b) in exact.embedding.eigenvalues().iter().zip(ny.eigenvalues()) {
        assert!((a - b).abs() < 1e-8);
    }
}

/// Averaging the centroid map with the Gaussian weights applies one more
/// walk step, so with every point a centroid the result is the exact map at
/// time `t + 1`.
#[test]
fn centroid_interp_with_every_point_advances_one_step() {
    let data = generate_swiss_roll(150, 0.0, 14).unwrap().data;
    let eps = eps_of(&data);
    let k = 6;
    let exact = exact_map(
        &data,
        &MapParams {
            epsilon: eps,
            neighbors: None,
            t: 2.0,
            k,
        },
        &EigenOptions::default(),
    )
    .unwrap();
    let ci = full_landmarks(BaselineMethod::CentroidInterp, &data, eps, k);
    let (report, _) = align_embeddings(&exact.embedding, &ci).unwrap();
    assert!(report.total_sse <= 1e-6 * 150.0, "{}", report.total_sse);
}

/// With one region per point the region-level error of a benchmark record
/// equals the error of the pointwise two-step map.
#[test]
fn singleton_record_matches_two_step_oracle() {
    let n = 200;
    let mut cfg = ExperimentConfig::swiss_roll(n, vec![Method::Exact, Method::Cfdm]);
    cfg.n_partitions = n;
    cfg.k = 8;
    cfg.neighbors = None;
    let rec = &run_experiment(&cfg).unwrap()[0];
    let data = generate_swiss_roll(n, 0.0, 0).unwrap().data;
    let params = MapParams {
        epsilon: rec.epsilon,
        neighbors: None,
        t: 1.0,
        k: 8,
    };
    let eigen = EigenOptions::default();
    let exact = exact_map(&data, &params, &eigen).unwrap();
    let two_step = two_step_map(&data, &params, &eigen).unwrap();
    let (oracle, _) = align_embeddings(&exact.embedding, &two_step.embedding).unwrap();
    let region_sse = rec.method(Method::Cfdm).unwrap().region_sse.unwrap();
    assert!(
        (region_sse - oracle.total_sse).abs() <= 1e-9 * oracle.total_sse.max(1.0),
        "{region_sse} vs {}",
        oracle.total_sse
    );
}
