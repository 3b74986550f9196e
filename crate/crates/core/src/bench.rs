//! Timed experiments comparing the exact map, the compressed map and the
//! landmark baselines, with JSON and CSV result files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::align::align_embeddings;
use crate::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use crate::datasets::{generate_swiss_roll, load_dataset};
use crate::eigen::EigenOptions;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::kernel::{default_epsilon, DataMatrix, DEFAULT_BANDWIDTH_NEIGHBORS};
use crate::pipeline::{cfdm_map, exact_map, CfdmConfig, MapParams, PhaseTimes};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    SwissRoll {
        n: usize,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    Csv {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Cfdm,
    Nystrom,
    CentroidInterp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Exact, Method::Cfdm, Method::Nystrom, Method::CentroidInterp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Cfdm => "cfdm",
            Method::Nystrom => "nystrom",
            Method::CentroidInterp => "centroid-interp",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Kernel used by the exact reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactKernel {
    /// Full Gaussian kernel without neighbor truncation.
    #[default]
    Dense,
    /// The same (possibly truncated) kernel as the approximations.
    Shared,
}

fn default_partitions() -> usize {
    150
}
fn default_k() -> usize {
    32
}
fn default_t() -> f64 {
    1.0
}
fn default_neighbors() -> Option<usize> {
    Some(DEFAULT_BANDWIDTH_NEIGHBORS)
}
fn default_repeats() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub methods: Vec<Method>,
    #[serde(default = "default_partitions")]
    pub n_partitions: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_t")]
    pub t: f64,
    /// Kernel bandwidth; the neighbor-distance heuristic when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Neighbor truncation of the approximations' kernel; `null` for dense.
    #[serde(default = "default_neighbors")]
    pub neighbors: Option<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exact_kernel: ExactKernel,
    /// Keep every method's coordinates in the record.
    #[serde(default)]
    pub store_embeddings: bool,
}

impl ExperimentConfig {
    pub fn swiss_roll(n: usize, methods: Vec<Method>) -> Self {
        ExperimentConfig {
            dataset: DatasetSpec::SwissRoll { n, noise: 0.0, seed: 0 },
            methods,
            n_partitions: default_partitions(),
            k: default_k(),
            t: default_t(),
            epsilon: None,
            neighbors: default_neighbors(),
            repeats: 1,
            seed: 0,
            exact_kernel: ExactKernel::Dense,
            store_embeddings: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(Error::Config(format!("field `{field}`: {reason}")));
        if self.methods.is_empty() {
            return bad("methods", "must list at least one method");
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods", "must not repeat a method");
        }
        if self.n_partitions == 0 {
            return bad("n_partitions", "must be positive");
        }
        if self.k == 0 {
            return bad("k", "must be positive");
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return bad("t", "must be finite and non-negative");
        }
        if self.repeats == 0 {
            return bad("repeats", "must be positive");
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) || !e.is_finite() {
                return bad("epsilon", "must be positive");
            }
        }
        if self.neighbors == Some(0) {
            return bad("neighbors", "must be positive or null");
        }
        match &self.dataset {
            DatasetSpec::SwissRoll { n, noise, .. } => {
                if *n == 0 {
                    return bad("dataset.n", "must be positive");
                }
                if !(*noise >= 0.0) || !noise.is_finite() {
                    return bad("dataset.noise", "must be finite and non-negative");
                }
            }
            DatasetSpec::Csv { path } => {
                if path.as_os_str().is_empty() {
                    return bad("dataset.path", "must not be empty");
                }
            }
        }
        Ok(())
    }

    /// Coherence-partition time: `t` when it is a positive integer, else 1.
    fn partition_t(&self) -> usize {
        if self.t >= 1.0 && self.t.fract() == 0.0 {
            self.t as usize
        } else {
            1
        }
    }
}

/// Parses a JSON config, reporting syntax errors with their byte offset.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        config_error(text, e.into_inner(), &path)
    })?;
    de.end().map_err(|e| config_error(text, e, "."))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    parse_config(&fs::read_to_string(path.as_ref())?)
}

fn config_error(text: &str, e: serde_json::Error, path: &str) -> Error {
    match e.classify() {
        serde_json::error::Category::Data if path != "." => Error::Config(format!("field `{path}`: {e}")),
        serde_json::error::Category::Data => Error::Config(format!("invalid config: {e}")),
        _ => {
            let offset = byte_offset(text, e.line(), e.column());
            Error::Config(format!(
                "malformed config at byte {offset} (line {}, column {}): {e}",
                e.line(),
                e.column()
            ))
        }
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub phase_seconds: PhaseTimes,
    pub total_seconds: f64,
    /// Aligned SSE against the exact map of the same record.
    pub sse: Option<f64>,
    pub mse: Option<f64>,
    pub per_point_error: Option<Vec<f64>>,
    /// CFDM only: SSE of the region-level map, each point carrying its
    /// region's coordinates, before interpolation.
    #[serde(default)]
    pub region_sse: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config: ExperimentConfig,
    pub repeat: usize,
    pub n: usize,
    pub n_partitions: usize,
    pub k: usize,
    pub t: f64,
    pub seed: u64,
    pub epsilon: f64,
    pub methods: Vec<MethodResult>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultRecord {
    pub fn method(&self, m: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }
}

fn load_data(cfg: &ExperimentConfig, repeat: usize) -> Result<(DataMatrix, Option<u64>)> {
    match &cfg.dataset {
        DatasetSpec::SwissRoll { n, noise, seed } => {
            let s = seed.wrapping_add(repeat as u64);
            Ok((generate_swiss_roll(*n, *noise, s)?.data, Some(s)))
        }
        DatasetSpec::Csv { path } => Ok((load_dataset(path)?, None)),
    }
}

fn metadata(cfg: &ExperimentConfig, epsilon_source: &str, data_seed: Option<u64>) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    put("version", env!("CARGO_PKG_VERSION").to_string());
    put("epsilon_source", epsilon_source.to_string());
    put("exact_kernel", format!("{:?}", cfg.exact_kernel).to_lowercase());
    put("sse_coordinates", "eigenvalue_scaled".into());
    put("mse", "sse_over_points".into());
    put("alignment", "hungarian_on_abs_pearson_with_correlation_signs".into());
    put("cfdm_interpolation", "row_normalized".into());
    put(
        "centroid_interp_rule",
        "gaussian_weighted_average_of_kmeans_centroid_map".into(),
    );
    put("nystrom", "volume_weighted_landmark_quadrature".into());
    put("landmarks", "kmeans_plus_plus_lloyd".into());
    put("timing", "kernel_construction_included_per_method".into());
    if let Some(s) = data_seed {
        put("dataset_seed", s.to_string());
    }
    m
}

fn coords_rows(e: &Embedding) -> Vec<Vec<f64>> {
    e.coordinates().outer_iter().map(|r| r.to_vec()).collect()
}

/// Runs every configured method once per repeat. Repeat `r` uses seed
/// `seed + r` for the methods and, for generated data, `dataset.seed + r`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    (0..cfg.repeats).map(|r| run_repeat(cfg, r)).collect()
}

fn run_repeat(cfg: &ExperimentConfig, repeat: usize) -> Result<ResultRecord> {
    let (data, data_seed) = load_data(cfg, repeat)?;
    let n = data.n();
    let seed = cfg.seed.wrapping_add(repeat as u64);
    let (epsilon, source) = match cfg.epsilon {
        Some(e) => (e, "config"),
        None => (
            default_epsilon(&data, DEFAULT_BANDWIDTH_NEIGHBORS)?,
            "nearest_neighbor_heuristic",
        ),
    };
    let neighbors = cfg.neighbors.filter(|&m| m < n);
    let params = MapParams {
        epsilon,
        neighbors,
        t: cfg.t,
        k: cfg.k,
    };
    let eigen = EigenOptions::default();

    let mut order = cfg.methods.clone();
    order.sort_by_key(|m| *m != Method::Exact);
    let mut reference: Option<Embedding> = None;
    let mut results = Vec::with_capacity(order.len());
    for method in order {
        info!("running {} on {n} points (repeat {repeat})", method.name());
        let mut region_map: Option<Embedding> = None;
        let outcome: Result<(Embedding, PhaseTimes, Vec<String>)> = match method {
            Method::Exact => {
                let p = MapParams {
                    neighbors: match cfg.exact_kernel {
                        ExactKernel::Dense => None,
                        ExactKernel::Shared => neighbors,
                    },
                    ..params
                };
                exact_map(&data, &p, &eigen).map(|o| (o.embedding, o.phases, Vec::new()))
            }
            Method::Cfdm => {
                let c = CfdmConfig {
                    map: params,
                    n_partitions: cfg.n_partitions,
                    partition_t: cfg.partition_t(),
                    seed,
                };
                cfdm_map(&data, &c, &eigen).and_then(|o| {
                    region_map = Some(o.region_map_at_points()?);
                    Ok((o.embedding, o.phases, Vec::new()))
                })
            }
            Method::Nystrom | Method::CentroidInterp => {
                let b = BaselineConfig {
                    method: if method == Method::Nystrom {
                        BaselineMethod::Nystrom
                    } else {
                        BaselineMethod::CentroidInterp
                    },
                    n_landmarks: cfg.n_partitions,
                    epsilon,
                    neighbors,
                    t: cfg.t,
                    k: cfg.k,
                    seed,
                    uniform_volume: false,
                };
                run_baseline(&data, &b).map(|o| (o.embedding, o.phases, o.warnings))
            }
        };
        let mut result = MethodResult {
            method,
            phase_seconds: PhaseTimes::new(),
            total_seconds: 0.0,
            sse: None,
            mse: None,
            per_point_error: None,
            region_sse: None,
            warnings: Vec::new(),
            error: None,
            embedding: None,
        };
        match outcome {
            Ok((embedding, phases, warnings)) => {
                result.total_seconds = phases.values().sum();
                result.phase_seconds = phases;
                result.warnings = warnings;
                if method != Method::Exact {
                    if let Some(exact) = &reference {
                        match align_embeddings(exact, &embedding) {
                            Ok((report, _)) => {
                                result.sse = Some(report.total_sse);
                                result.mse = Some(report.total_mse);
                                if report.has_degenerate_components() {
                                    result
                                        .warnings
                                        .push("constant components excluded from matching".into());
                                }
                                result.per_point_error = Some(report.per_point_error);
                            }
                            Err(e) => result.warnings.push(format!("alignment failed: {e}")),
                        }
                    }
                }
                if let (Some(exact), Some(regions)) = (&reference, &region_map) {
                    result.region_sse = align_embeddings(exact, regions).ok().map(|(r, _)| r.total_sse);
                }
                if cfg.store_embeddings {
                    result.embedding = Some(coords_rows(&embedding));
                }
                if method == Method::Exact {
                    reference = Some(embedding);
                }
            }
            Err(e) => {
                log::warn!("{} failed: {e}", method.name());
                result.error = Some(e.to_string());
            }
        }
        results.push(result);
    }
    Ok(ResultRecord {
        config: cfg.clone(),
        repeat,
        n,
        n_partitions: cfg.n_partitions,
        k: cfg.k,
        t: cfg.t,
        seed,
        epsilon,
        methods: results,
        metadata: metadata(cfg, source, data_seed),
    })
}

/// Values to sweep; an empty axis keeps the base config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub n_partitions: Vec<usize>,
    #[serde(default)]
    pub methods: Vec<Vec<Method>>,
}

/// Configs of the Cartesian product of the grid axes, in row-major order
/// (`n` slowest, `methods` fastest).
pub fn sweep_configs(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<ExperimentConfig>> {
    let ns: Vec<Option<usize>> = if grid.n.is_empty() {
        vec![None]
    } else {
        if matches!(base.dataset, DatasetSpec::Csv { .. }) {
            return Err(Error::Config(
                "field `n`: cannot sweep the size of a CSV dataset".into(),
            ));
        }
        grid.n.iter().copied().map(Some).collect()
    };
    let parts: Vec<usize> = if grid.n_partitions.is_empty() {
        vec![base.n_partitions]
    } else {
        grid.n_partitions.clone()
    };
    let methods: Vec<Vec<Method>> = if grid.methods.is_empty() {
        vec![base.methods.clone()]
    } else {
        grid.methods.clone()
    };
    let mut out = Vec::new();
    for n in &ns {
        for &p in &parts {
            for m in &methods {
                let mut cfg = base.clone();
                if let (Some(n), DatasetSpec::SwissRoll { n: size, .. }) = (n, &mut cfg.dataset) {
                    *size = *n;
                }
                cfg.n_partitions = p;
                cfg.methods = m.clone();
                cfg.validate()?;
                out.push(cfg);
            }
        }
    }
    Ok(out)
}

/// One record per grid cell and repeat.
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<ResultRecord>> {
    let mut records = Vec::new();
    for cfg in sweep_configs(base, grid)? {
        records.extend(run_experiment(&cfg)?);
    }
    Ok(records)
}

const CSV_PHASES: [&str; 6] = [
    crate::pipeline::PHASE_KERNEL,
    crate::pipeline::PHASE_PARTITIONING,
    crate::pipeline::PHASE_COMPRESSION,
    crate::pipeline::PHASE_EIGENSOLVE,
    crate::pipeline::PHASE_INTERPOLATION,
    crate::pipeline::PHASE_EMBEDDING,
];

/// Writes `results.csv` with one row per (record, method).
pub fn write_results_csv<W: std::io::Write>(writer: W, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = [
        "record",
        "repeat",
        "n",
        "n_partitions",
        "k",
        "t",
        "seed",
        "epsilon",
        "method",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(CSV_PHASES.iter().map(|p| format!("{p}_seconds")));
    header.extend(
        ["total_seconds", "sse", "mse", "region_sse", "error"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, rec) in records.iter().enumerate() {
        for m in &rec.methods {
            let mut row = vec![
                i.to_string(),
                rec.repeat.to_string(),
                rec.n.to_string(),
                rec.n_partitions.to_string(),
                rec.k.to_string(),
                rec.t.to_string(),
                rec.seed.to_string(),
                rec.epsilon.to_string(),
                m.method.name().to_string(),
            ];
            row.extend(CSV_PHASES.iter().map(|p| opt(m.phase_seconds.get(*p).copied())));
            row.push(m.total_seconds.to_string());
            row.push(opt(m.sse));
            row.push(opt(m.mse));
            row.push(opt(m.region_sse));
            row.push(m.error.clone().unwrap_or_default());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `record_NNN.json` per record plus `results.csv` into `dir`.
pub fn write_results(dir: impl AsRef<Path>, records: &[ResultRecord]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(records.len() + 1);
    for (i, rec) in records.iter().enumerate() {
        let path = dir.join(format!("record_{i:03}.json"));
        fs::write(&path, serde_json::to_string_pretty(rec)?)?;
        paths.push(path);
    }
    let csv_path = dir.join("results.csv");
    write_results_csv(fs::File::create(&csv_path)?, records)?;
    paths.push(csv_path);
    Ok(paths)
}

pub fn read_record(path: impl AsRef<Path>) -> Result<ResultRecord> {
    Ok(serde_json::from_str(&fs::read_to_string(path.as_ref())?)?)
}
