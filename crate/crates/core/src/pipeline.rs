//! End-to-end diffusion-map pipelines with per-phase wall-clock timing.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::compression::{compress, CompressedOperators, Partition};
use crate::eigen::{eigendecompose_with, EigenOptions};
use crate::embedding::{compressed_diffusion_map_with, diffusion_map, interpolate_embedding, Embedding, Subject};
use crate::error::{Error, Result};
use crate::kernel::{build_gaussian_kernel, build_idmgc_kernel, symmetric_affinity, AffinityOperator, DataMatrix};
use crate::partition::coherence_partition;

/// Phase name to seconds.
pub type PhaseTimes = BTreeMap<String, f64>;

pub const PHASE_KERNEL: &str = "kernel";
pub const PHASE_PARTITIONING: &str = "partitioning";
pub const PHASE_COMPRESSION: &str = "compression";
pub const PHASE_EIGENSOLVE: &str = "eigensolve";
pub const PHASE_INTERPOLATION: &str = "interpolation";
pub const PHASE_EMBEDDING: &str = "embedding";

pub(crate) fn timed<T>(phases: &mut PhaseTimes, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    *phases.entry(name.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
    Ok(out)
}

/// Shared kernel and embedding parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub epsilon: f64,
    /// `None` keeps the dense kernel.
    pub neighbors: Option<usize>,
    pub t: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapOutput {
    pub embedding: Embedding,
    pub phases: PhaseTimes,
}

impl MapOutput {
    pub fn total_seconds(&self) -> f64 {
        self.phases.values().sum()
    }
}

/// Diffusion map of the Gaussian kernel itself.
pub fn exact_map(data: &DataMatrix, params: &MapParams, eigen: &EigenOptions) -> Result<MapOutput> {
    let mut phases = PhaseTimes::new();
    let affinity = timed(&mut phases, PHASE_KERNEL, || {
        let g = build_gaussian_kernel(data, params.epsilon, params.neighbors)?;
        AffinityOperator::from_kernel(g)
    })?;
    let eigs = timed(&mut phases, PHASE_EIGENSOLVE, || {
        eigendecompose_with(&affinity, (params.k + 1).min(affinity.n()), eigen)
    })?;
    let embedding = timed(&mut phases, PHASE_EMBEDDING, || {
        diffusion_map(&eigs, affinity.degrees(), params.t, params.k)
    })?;
    Ok(MapOutput { embedding, phases })
}

/// Diffusion map of the ID-MGC kernel, the pointwise two-step map.
/// Materializes an `n × n` kernel.
pub fn two_step_map(data: &DataMatrix, params: &MapParams, eigen: &EigenOptions) -> Result<MapOutput> {
    let mut phases = PhaseTimes::new();
    let affinity = timed(&mut phases, PHASE_KERNEL, || {
        let g = build_gaussian_kernel(data, params.epsilon, params.neighbors)?;
        let k = build_idmgc_kernel(&g, g.degrees())?;
        AffinityOperator::from_kernel(k)
    })?;
    let eigs = timed(&mut phases, PHASE_EIGENSOLVE, || {
        eigendecompose_with(&affinity, (params.k + 1).min(affinity.n()), eigen)
    })?;
    let embedding = timed(&mut phases, PHASE_EMBEDDING, || {
        diffusion_map(&eigs, affinity.degrees(), params.t, params.k)
    })?;
    Ok(MapOutput { embedding, phases })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfdmConfig {
    pub map: MapParams,
    pub n_partitions: usize,
    /// Diffusion time of the coherence sampling and angular assignment.
    pub partition_t: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfdmOutput {
    /// Interpolated point embedding.
    pub embedding: Embedding,
    /// Region embedding, one row per region.
    pub regions: Embedding,
    pub partition: Partition,
    pub operators: CompressedOperators,
    pub phases: PhaseTimes,
}

impl CfdmOutput {
    pub fn total_seconds(&self) -> f64 {
        self.phases.values().sum()
    }

    /// Each point takes the coordinates of its own region.
    pub fn region_map_at_points(&self) -> Result<Embedding> {
        self.regions.select_rows(self.partition.assignment(), Subject::Points)
    }
}

/// Partition by coherence, compress the ID-MGC kernel, embed the regions and
/// interpolate back to points.
pub fn cfdm_map(data: &DataMatrix, cfg: &CfdmConfig, eigen: &EigenOptions) -> Result<CfdmOutput> {
    let n = data.n();
    if cfg.n_partitions == 0 || cfg.n_partitions > n {
        return Err(Error::param(
            "n_partitions",
            format!("must be in 1..={n}, got {}", cfg.n_partitions),
        ));
    }
    let mut phases = PhaseTimes::new();
    let g = timed(&mut phases, PHASE_KERNEL, || {
        build_gaussian_kernel(data, cfg.map.epsilon, cfg.map.neighbors)
    })?;
    let partition = timed(&mut phases, PHASE_PARTITIONING, || {
        let affinity = symmetric_affinity(&g, g.degrees())?;
        coherence_partition(&affinity, cfg.n_partitions, cfg.partition_t.max(1), cfg.seed)
    })?;
    let operators = timed(&mut phases, PHASE_COMPRESSION, || compress(&g, &partition))?;
    let regions = timed(&mut phases, PHASE_EIGENSOLVE, || {
        compressed_diffusion_map_with(&operators, cfg.map.t, cfg.map.k, eigen)
    })?;
    let embedding = timed(&mut phases, PHASE_INTERPOLATION, || {
        interpolate_embedding(&regions, &operators.interp)
    })?;
    Ok(CfdmOutput {
        embedding,
        regions,
        partition,
        operators,
        phases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::generate_swiss_roll;

    #[test]
    fn phases_are_recorded() {
        let data = generate_swiss_roll(120, 0.0, 1).unwrap().data;
        let params = MapParams {
            epsilon: 4.0,
            neighbors: Some(10),
            t: 1.0,
            k: 3,
        };
        let exact = exact_map(&data, &params, &EigenOptions::default()).unwrap();
        assert_eq!(exact.embedding.coordinates().dim(), (120, 3));
        assert!(exact.phases.contains_key(PHASE_EIGENSOLVE));
        let cfg = CfdmConfig {
            map: params,
            n_partitions: 20,
            partition_t: 1,
            seed: 3,
        };
        let out = cfdm_map(&data, &cfg, &EigenOptions::default()).unwrap();
        assert_eq!(out.embedding.coordinates().dim(), (120, 3));
        assert_eq!(out.regions.coordinates().dim(), (20, 3));
        for p in [
            PHASE_KERNEL,
            PHASE_PARTITIONING,
            PHASE_COMPRESSION,
            PHASE_EIGENSOLVE,
            PHASE_INTERPOLATION,
        ] {
            assert!(out.phases[p] >= 0.0);
        }
        assert!(out.total_seconds() >= 0.0);
        assert_eq!(out.region_map_at_points().unwrap().count(), 120);
    }

    #[test]
    fn partition_count_is_checked() {
        let data = generate_swiss_roll(10, 0.0, 1).unwrap().data;
        let cfg = CfdmConfig {
            map: MapParams {
                epsilon: 4.0,
                neighbors: None,
                t: 1.0,
                k: 2,
            },
            n_partitions: 11,
            partition_t: 1,
            seed: 0,
        };
        assert!(cfdm_map(&data, &cfg, &EigenOptions::default()).is_err());
    }
}
