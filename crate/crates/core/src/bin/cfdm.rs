//! Command-line entry point: dataset generation, embedding, benchmarking and
//! evaluation. Exit codes: 0 success, 2 usage error, 1 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cfdm::align::align_coordinates;
use cfdm::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use cfdm::bench::{
    load_config, run_experiment, sweep_configs, write_results, DatasetSpec, ExactKernel, ExperimentConfig, Method,
    ResultRecord, SweepGrid,
};
use cfdm::datasets::{embedding_header, generate_swiss_roll, load_dataset, read_matrix_csv, save_matrix};
use cfdm::eigen::EigenOptions;
use cfdm::embedding::Embedding;
use cfdm::kernel::{default_epsilon, DEFAULT_BANDWIDTH_NEIGHBORS};
use cfdm::pipeline::{cfdm_map, exact_map, two_step_map, CfdmConfig, MapParams, PhaseTimes};
use cfdm::Error;

#[derive(Parser)]
#[command(name = "cfdm", version, about = "Compression-based fast diffusion maps")]
struct Cli {
    /// Log library diagnostics to stderr (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a Swiss roll and write it as CSV.
    Generate(GenerateArgs),
    /// Embed a CSV point cloud with one method.
    Embed(EmbedArgs),
    /// Run timed experiments over a parameter grid.
    Benchmark(BenchmarkArgs),
    /// Align a candidate embedding to a reference and report the error.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of points.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Standard deviation of the isotropic Gaussian noise.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    noise: f64,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV with columns x, y, z.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of the intrinsic coordinates u, h.
    #[arg(long)]
    intrinsic_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbedMethod {
    Exact,
    /// Pointwise map of the ID-MGC kernel (dense).
    TwoStep,
    Cfdm,
    Nystrom,
    CentroidInterp,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long, value_enum)]
    method: EmbedMethod,
    /// Input CSV, one point per row, optional header.
    #[arg(long)]
    input: PathBuf,
    /// Regions (cfdm) or landmarks (baselines).
    #[arg(long, default_value_t = 150, value_parser = clap::value_parser!(u64).range(1..))]
    partitions: u64,
    /// Number of diffusion components.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    components: u64,
    /// Diffusion time.
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    t: f64,
    /// Kernel bandwidth; estimated from nearest-neighbor distances when absent.
    #[arg(long, value_parser = positive)]
    epsilon: Option<f64>,
    /// Keep only this many neighbors per kernel row; dense when absent.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    knn: Option<u64>,
    /// Diffusion time of the coherence partition (cfdm).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    partition_t: u64,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output embedding CSV, one row per point.
    #[arg(long)]
    out: PathBuf,
    /// Metadata JSON; defaults to the output path with a .json extension.
    #[arg(long)]
    meta_out: Option<PathBuf>,
    /// CSV where every point carries its region's coordinates (cfdm).
    #[arg(long)]
    region_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// JSON experiment config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for per-record JSON files and results.csv.
    #[arg(long)]
    out_dir: PathBuf,
    /// CSV dataset instead of a generated Swiss roll.
    #[arg(long, conflicts_with_all = ["n", "noise", "data_seed"])]
    input: Option<PathBuf>,
    /// Swiss-roll size.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
    /// Swiss-roll noise.
    #[arg(long, value_parser = non_negative)]
    noise: Option<f64>,
    /// Swiss-roll seed.
    #[arg(long)]
    data_seed: Option<u64>,
    /// Comma-separated methods; all four when neither config nor flag sets them.
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<MethodArg>>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    partitions: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    components: Option<u64>,
    #[arg(long, value_parser = non_negative)]
    t: Option<f64>,
    #[arg(long, value_parser = positive)]
    epsilon: Option<f64>,
    /// Neighbor truncation of the approximations' kernel.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), conflicts_with = "dense")]
    knn: Option<u64>,
    /// Use the dense kernel for every method.
    #[arg(long)]
    dense: bool,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Kernel of the exact reference.
    #[arg(long, value_enum)]
    exact_kernel: Option<ExactKernelArg>,
    /// Keep every method's coordinates in the JSON records.
    #[arg(long)]
    store_embeddings: bool,
    /// Comma-separated Swiss-roll sizes to sweep.
    #[arg(long, value_delimiter = ',')]
    grid_n: Vec<usize>,
    /// Comma-separated partition counts to sweep.
    #[arg(long, value_delimiter = ',')]
    grid_partitions: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Cfdm,
    Nystrom,
    CentroidInterp,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Cfdm => Method::Cfdm,
            MethodArg::Nystrom => Method::Nystrom,
            MethodArg::CentroidInterp => Method::CentroidInterp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactKernelArg {
    Dense,
    Shared,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Reference embedding CSV.
    #[arg(long)]
    reference: PathBuf,
    /// Candidate embedding CSV with the same rows.
    #[arg(long)]
    candidate: PathBuf,
    /// Alignment report JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is not a finite non-negative number")),
        Err(e) => Err(e.to_string()),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is not a finite positive number")),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Embed(a) => embed(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn report_phases(phases: &PhaseTimes, prefix: &str) {
    for (phase, seconds) in phases {
        eprintln!("{prefix}phase={phase} seconds={seconds:.6}");
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Error> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn generate(a: GenerateArgs) -> CliResult {
    let roll = generate_swiss_roll(a.n as usize, a.noise, a.seed)?;
    let header: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    save_matrix(&a.out, roll.data.values(), Some(&header))?;
    if let Some(path) = &a.intrinsic_out {
        let uh = ndarray::Array2::from_shape_fn((roll.u.len(), 2), |(i, j)| if j == 0 { roll.u[i] } else { roll.h[i] });
        let header: Vec<String> = ["u", "h"].iter().map(|s| s.to_string()).collect();
        save_matrix(path, &uh, Some(&header))?;
    }
    println!("wrote {} rows to {}", a.n, a.out.display());
    Ok(())
}

fn embed(a: EmbedArgs) -> CliResult {
    if a.region_out.is_some() && a.method != EmbedMethod::Cfdm {
        return Err(Failure::Usage("--region-out applies only to --method cfdm".into()));
    }
    let data = load_dataset(&a.input)?;
    let epsilon = match a.epsilon {
        Some(e) => e,
        None => default_epsilon(&data, DEFAULT_BANDWIDTH_NEIGHBORS)?,
    };
    let params = MapParams {
        epsilon,
        neighbors: a.knn.map(|k| k as usize),
        t: a.t,
        k: a.components as usize,
    };
    let eigen = EigenOptions::default();
    let mut warnings = Vec::new();
    let mut regions: Option<Embedding> = None;
    let (embedding, phases) = match a.method {
        EmbedMethod::Exact => {
            let o = exact_map(&data, &params, &eigen)?;
            (o.embedding, o.phases)
        }
        EmbedMethod::TwoStep => {
            let o = two_step_map(&data, &params, &eigen)?;
            (o.embedding, o.phases)
        }
        EmbedMethod::Cfdm => {
            let cfg = CfdmConfig {
                map: params,
                n_partitions: a.partitions as usize,
                partition_t: a.partition_t as usize,
                seed: a.seed,
            };
            let o = cfdm_map(&data, &cfg, &eigen)?;
            if a.region_out.is_some() {
                regions = Some(o.region_map_at_points()?);
            }
            (o.embedding, o.phases)
        }
        EmbedMethod::Nystrom | EmbedMethod::CentroidInterp => {
            let cfg = BaselineConfig {
                method: if a.method == EmbedMethod::Nystrom {
                    BaselineMethod::Nystrom
                } else {
                    BaselineMethod::CentroidInterp
                },
                n_landmarks: a.partitions as usize,
                epsilon,
                neighbors: params.neighbors,
                t: a.t,
                k: params.k,
                seed: a.seed,
                uniform_volume: false,
            };
            let o = run_baseline(&data, &cfg)?;
            warnings = o.warnings;
            (o.embedding, o.phases)
        }
    };
    report_phases(&phases, "");
    for w in &warnings {
        log::warn!("{w}");
    }
    let header = embedding_header(embedding.k());
    save_matrix(&a.out, embedding.coordinates(), Some(&header))?;
    if let (Some(path), Some(r)) = (&a.region_out, &regions) {
        save_matrix(path, r.coordinates(), Some(&header))?;
    }
    let method = a
        .method
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let meta = json!({
        "method": method,
        "input": a.input,
        "n": data.n(),
        "k": embedding.k(),
        "t": a.t,
        "epsilon": epsilon,
        "neighbors": params.neighbors,
        "partitions": matches!(a.method, EmbedMethod::Cfdm | EmbedMethod::Nystrom | EmbedMethod::CentroidInterp)
            .then_some(a.partitions),
        "seed": a.seed,
        "eigenvalues": embedding.eigenvalues(),
        "phase_seconds": phases,
        "total_seconds": phases.values().sum::<f64>(),
        "warnings": warnings,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let meta_path = a.meta_out.unwrap_or_else(|| a.out.with_extension("json"));
    write_json(&meta_path, &meta)?;
    println!(
        "wrote {}x{} embedding to {}",
        embedding.count(),
        embedding.k(),
        a.out.display()
    );
    Ok(())
}

fn benchmark_config(a: &BenchmarkArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => load_config(path)?,
        None => {
            let dataset = match (&a.input, a.n) {
                (Some(path), _) => DatasetSpec::Csv { path: path.clone() },
                (None, Some(n)) => DatasetSpec::SwissRoll {
                    n: n as usize,
                    noise: 0.0,
                    seed: 0,
                },
                (None, None) => {
                    return Err(Failure::Usage(
                        "give --config, --input or --n to choose a dataset".into(),
                    ));
                }
            };
            let mut cfg = ExperimentConfig::swiss_roll(1, Method::ALL.to_vec());
            cfg.dataset = dataset;
            cfg
        }
    };
    if let Some(path) = &a.input {
        cfg.dataset = DatasetSpec::Csv { path: path.clone() };
    }
    if a.n.is_some() || a.noise.is_some() || a.data_seed.is_some() {
        let (mut n, mut noise, mut seed) = match cfg.dataset {
            DatasetSpec::SwissRoll { n, noise, seed } => (n, noise, seed),
            DatasetSpec::Csv { .. } => (0, 0.0, 0),
        };
        n = a.n.map_or(n, |v| v as usize);
        noise = a.noise.unwrap_or(noise);
        seed = a.data_seed.unwrap_or(seed);
        if n == 0 {
            return Err(Failure::Usage(
                "--noise and --data-seed need a Swiss-roll size (--n)".into(),
            ));
        }
        cfg.dataset = DatasetSpec::SwissRoll { n, noise, seed };
    }
    if let Some(m) = &a.methods {
        cfg.methods = m.iter().map(|&m| m.into()).collect();
    }
    if let Some(v) = a.partitions {
        cfg.n_partitions = v as usize;
    }
    if let Some(v) = a.components {
        cfg.k = v as usize;
    }
    if let Some(v) = a.t {
        cfg.t = v;
    }
    if a.epsilon.is_some() {
        cfg.epsilon = a.epsilon;
    }
    if let Some(v) = a.knn {
        cfg.neighbors = Some(v as usize);
    }
    if a.dense {
        cfg.neighbors = None;
    }
    if let Some(v) = a.repeats {
        cfg.repeats = v as usize;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.exact_kernel {
        cfg.exact_kernel = match v {
            ExactKernelArg::Dense => ExactKernel::Dense,
            ExactKernelArg::Shared => ExactKernel::Shared,
        };
    }
    if a.store_embeddings {
        cfg.store_embeddings = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn benchmark(a: BenchmarkArgs) -> CliResult {
    let base = benchmark_config(&a)?;
    let grid = SweepGrid {
        n: a.grid_n.clone(),
        n_partitions: a.grid_partitions.clone(),
        methods: Vec::new(),
    };
    let mut records: Vec<ResultRecord> = Vec::new();
    for cfg in sweep_configs(&base, &grid)? {
        for rec in run_experiment(&cfg)? {
            let index = records.len();
            for m in &rec.methods {
                let prefix = format!("record={index} n={} method={} ", rec.n, m.method.name());
                report_phases(&m.phase_seconds, &prefix);
                match (&m.error, m.sse) {
                    (Some(e), _) => eprintln!("{prefix}error={e:?}"),
                    (None, Some(sse)) => eprintln!("{prefix}total_seconds={:.6} sse={sse:e}", m.total_seconds),
                    (None, None) => eprintln!("{prefix}total_seconds={:.6}", m.total_seconds),
                }
            }
            records.push(rec);
        }
    }
    let paths = write_results(&a.out_dir, &records)?;
    println!(
        "wrote {} records and {}",
        records.len(),
        paths.last().map_or(String::new(), |p| p.display().to_string())
    );
    Ok(())
}

fn read_coordinates(path: &Path) -> Result<ndarray::Array2<f64>, Error> {
    read_matrix_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

fn evaluate(a: EvaluateArgs) -> CliResult {
    let reference = read_coordinates(&a.reference)?;
    let candidate = read_coordinates(&a.candidate)?;
    let (report, _) = align_coordinates(&reference, &candidate)?;
    match &a.out {
        Some(path) => {
            write_json(path, &report)?;
            println!("sse={:e} mse={:e}", report.total_sse, report.total_mse);
        }
        None => println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?),
    }
    Ok(())
}
