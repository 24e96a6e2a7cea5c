use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "glx", version, about = "Sparse inverse covariance estimation by covariance thresholding")]
pub struct Cli {
    /// Worker threads (falls back to GLX_THREADS, then the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a sparse precision matrix.
    Estimate(EstimateArgs),
    /// Report the optimality conditions and error certificate of the closed form.
    Check(CheckArgs),
    /// Time the closed form against the numerical solvers on synthetic data.
    Bench(BenchArgs),
    /// Write a synthetic instance.
    Gen(GenArgs),
    /// Tabulate support statistics over a range of thresholds.
    Sweep(SweepArgs),
    /// Tabulate the closed-form duality gap against cycle length.
    CycleGap(CycleGapArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Impute {
    /// Linear interpolation within each column over row order.
    LinearTime,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Covariance matrix in Matrix Market format.
    #[arg(long)]
    pub cov: Option<PathBuf>,
    /// Headered CSV of observations, one row per sample.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    #[command(flatten)]
    pub source: Source,
    /// Fill missing sample values instead of dropping their rows.
    #[arg(long, value_enum)]
    pub impute: Option<Impute>,
    /// Drop sample rows with missing values (the default).
    #[arg(long, conflicts_with = "impute")]
    pub drop_rows: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Threshold {
    /// Regularization level.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of off-diagonal pairs to keep; the threshold is placed midway
    /// between the k-th and (k+1)-th largest magnitudes.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Closed form; fails with exit code 2 unless provably optimal.
    Closed,
    /// Closed form used as an approximation.
    Approx,
    /// Block coordinate descent from scratch.
    Glasso,
    /// Closed form where exact, block coordinate descent elsewhere.
    Warm,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: SourceArgs,
    #[command(flatten)]
    pub threshold: Threshold,
    #[arg(long, value_enum, default_value = "warm")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Where to write the estimate (Matrix Market).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the JSON report (standard output if absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// True precision matrix for accuracy metrics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also compute the exact optimality residual of closed-form output.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: SourceArgs,
    #[command(flatten)]
    pub threshold: Threshold,
    /// Cap on simple paths counted between any pair.
    #[arg(long, default_value_t = 1_000_000)]
    pub path_cap: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2000")]
    pub sizes: Vec<usize>,
    /// Target number of precision edges per variable.
    #[arg(long, default_value_t = 5.0)]
    pub nnz_factor: f64,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub seeds: Vec<u64>,
    /// Samples per variable; 0 uses the true covariance.
    #[arg(long, default_value_t = 0.5)]
    pub sample_ratio: f64,
    /// Time only the closed form.
    #[arg(long)]
    pub closed_only: bool,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-instance timing table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
}

#[derive(Debug, Args)]
pub struct GenCommon {
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Sparse precision `U U^T + 2 I` with Gaussian samples.
    Random {
        #[command(flatten)]
        common: GenCommon,
        /// Target number of off-diagonal precision pairs (default 5d).
        #[arg(long)]
        nnz: Option<usize>,
        /// Number of samples (default d/2; 0 writes none).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Covariance whose thresholded graph is a spanning tree.
    Tree {
        #[command(flatten)]
        common: GenCommon,
        #[arg(long, default_value_t = 0.02)]
        omega: f64,
    },
    /// Covariance whose thresholded graph is one cycle.
    Cycle {
        #[command(flatten)]
        common: GenCommon,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SweepLevels {
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long = "k-values", value_delimiter = ',')]
    pub k_values: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: SourceArgs,
    #[command(flatten)]
    pub levels: SweepLevels,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// CSV table, one row per threshold.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CycleGapArgs {
    #[arg(long, default_value_t = 4)]
    pub min_d: usize,
    #[arg(long, default_value_t = 12)]
    pub max_d: usize,
    #[arg(long, default_value_t = 11)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}
