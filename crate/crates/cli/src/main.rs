//! `geograsp` command line: corpus precomputation, single-mesh tools,
//! query benchmarks and reward-trace evaluation.
//!
//! Exit codes: 0 on success, 1 when any object or input fails, 2 for an
//! invalid invocation (bad flags, unreadable or invalid manifest).

mod commands;
mod error;
mod manifest;
mod precompute;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "geograsp",
    version,
    about = "Geometry assets and rewards for grasping"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build grid, bounding box, center of mass, superquadric and point
    /// clouds for every object of a corpus manifest.
    PrecomputeSdf(PrecomputeArgs),
    /// Fit a superquadric to a mesh.
    FitSq(FitArgs),
    /// Oriented bounding box and center of mass of a mesh.
    Obb(MeshArgs),
    /// Seeded surface samples of a mesh.
    SamplePc(SampleArgs),
    /// Time batched grid queries.
    BenchQuery(BenchArgs),
    /// Append reward columns to a trace of (step, delta_h, d1..d5) rows.
    RewardEval(RewardArgs),
}

#[derive(Debug, Clone, Copy, Args)]
struct GridArgs {
    /// Samples per axis.
    #[arg(long, default_value_t = 200)]
    dims: usize,
    /// Half-width of the cubic grid around the mesh origin (m).
    #[arg(long, default_value_t = 0.5)]
    bounds: f64,
}

#[derive(Debug, Args)]
struct PrecomputeArgs {
    /// TOML corpus manifest.
    manifest: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Regularizer weight of the superquadric fit.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Surface samples fed to the superquadric fit.
    #[arg(long, default_value_t = 2000)]
    points: usize,
    /// Rebuild even when the cache is up to date.
    #[arg(long)]
    force: bool,
    /// Cache directory, overriding the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    mesh: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Surface samples to fit.
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[command(flatten)]
    grid: GridArgs,
    /// Also fit without the regularizer and report the loss ratios.
    #[arg(long)]
    compare: bool,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MeshArgs {
    mesh: PathBuf,
    /// JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    mesh: PathBuf,
    #[arg(long, default_value_t = 512)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    grid: PathBuf,
    /// Points per batch; the default is 16,384 environments × 5 fingertips.
    #[arg(long, default_value_t = 81_920)]
    points: usize,
    #[arg(long, default_value_t = 50)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RewardArgs {
    /// Trace file, or `-` for stdin.
    trace: PathBuf,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    c3: Option<f64>,
    #[arg(long)]
    eps_h: Option<f64>,
    #[arg(long)]
    eps_sdf: Option<f64>,
    #[arg(long)]
    h_bar: Option<f64>,
    /// Sum raw signed fingertip distances instead of clamping at zero.
    #[arg(long)]
    signed: bool,
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Invocation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Invocation(e.to_string()))?;
    }
    match cli.command {
        Command::PrecomputeSdf(args) => precompute::run(&args),
        Command::FitSq(args) => commands::fit_sq(&args),
        Command::Obb(args) => commands::obb(&args),
        Command::SamplePc(args) => commands::sample_pc(&args),
        Command::BenchQuery(args) => commands::bench_query(&args),
        Command::RewardEval(args) => commands::reward_eval(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
