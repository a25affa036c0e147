//! Command-line interface: fit models to CSV data, simulate synthetic
//! samples, and run the replication benchmark.
//!
//! Exit codes: 0 on success, 2 for malformed input (bad flags or unreadable
//! CSV), 3 for solver or benchmark failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use npmix::solver::InitMethod;
use npmix::{Bandwidth, Family, FitConfig, SyntheticSpec};
use npmix_bench::{BenchConfig, ALLOWED_SIZES};

mod csvio;

/// Environment variable selecting the benchmark worker-thread count.
const WORKERS_ENV: &str = "NPMIX_WORKERS";

#[derive(Parser)]
#[command(name = "npmix", version, about = "Nonparametric product-density mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a mixture to a CSV of observations.
    Fit(FitArgs),
    /// Draw a labeled synthetic sample and write it as CSV.
    Simulate(SimulateArgs),
    /// Run the Monte Carlo benchmark grid and write report CSVs.
    Bench(BenchArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV: one observation per row, numeric columns, optional
    /// header row (auto-detected).
    input: PathBuf,
    /// Number of mixture components.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Bandwidth: "auto" for the sd * n^(-1/5) rule, or a positive number.
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    /// Grid points per coordinate.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Iteration cap.
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Stop when the loss decrease falls below this.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Initialization: "kmeans" or "random".
    #[arg(long, default_value = "kmeans")]
    init: String,
    /// Seed for initialization randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fit attempts (best final loss wins); restart 0 uses --init, the
    /// rest use random responsibilities.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Record per-iteration descent certificates in the output.
    #[arg(long)]
    certify: bool,
    /// Columns to ignore, by header name (or 0-based index without a
    /// header); repeatable.
    #[arg(long = "drop-column")]
    drop_columns: Vec<String>,
    /// Output JSON path.
    #[arg(long, default_value = "fit.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Base family: gaussian, student, or laplace.
    #[arg(long, default_value = "gaussian")]
    family: String,
    /// Coordinates per observation.
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Observations to draw.
    #[arg(long)]
    n: usize,
    /// Seed of the draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long, default_value = "sample.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Families to benchmark (comma-separated).
    #[arg(long, value_delimiter = ',', default_values_t = ["gaussian".to_string(), "student".to_string(), "laplace".to_string()])]
    families: Vec<String>,
    /// Sample sizes (comma-separated, each from the supported set).
    #[arg(long, value_delimiter = ',', default_values_t = ALLOWED_SIZES)]
    sizes: Vec<usize>,
    /// Replications per (family, size) cell.
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Scaling adjustment: errors are scaled by n^(2/5 - epsilon).
    #[arg(long, default_value_t = 0.001)]
    epsilon: f64,
    /// Base seed of the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fit attempts per replication.
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    /// Grid points per coordinate.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Iteration cap per fit.
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Loss tolerance per fit.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Summary CSV path.
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
    /// Per-(component, coordinate) CSV path; defaults to the summary path
    /// with a "_by_component" suffix.
    #[arg(long)]
    detail_out: Option<PathBuf>,
}

/// Failures carry the exit code mandated for their kind.
enum CliError {
    /// Unreadable or malformed input: exit code 2.
    Input(String),
    /// Solver or benchmark failure: exit code 3.
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Run(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Run(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let table = csvio::read_table(&args.input)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    let data = table
        .to_dataset(&args.drop_columns)
        .map_err(CliError::Input)?;

    let bandwidth = parse_bandwidth(&args.bandwidth)?;
    let init = parse_init(&args.init)?;
    let config = FitConfig {
        k: args.k,
        bandwidth,
        grid_points: args.grid,
        max_iters: args.max_iters,
        loss_tol: args.tol,
        init,
        seed: args.seed,
        certify_descent: args.certify,
    };

    // Resolve the bandwidth up front so the echoed configuration shows the
    // actual number used.
    let kernel = npmix::solver::resolve_kernel(&data, &config)
        .map_err(|e| CliError::Input(e.to_string()))?;
    println!(
        "fit: input={} n={} j={} k={} bandwidth={:.6}{} grid={} max_iters={} tol={:e} init={} seed={} restarts={}",
        args.input.display(),
        data.n(),
        data.j(),
        args.k,
        kernel.bandwidth,
        if matches!(config.bandwidth, Bandwidth::Auto) { " (auto)" } else { "" },
        args.grid,
        args.max_iters,
        args.tol,
        args.init,
        args.seed,
        args.restarts,
    );

    let result = npmix_bench::fit_with_restarts(&data, &config, args.restarts.max(1))
        .map_err(|e| CliError::Run(e.to_string()))?;

    let loss = result.loss_trajectory.last().map(|l| l.0).unwrap_or(f64::NAN);
    let weights: Vec<String> = result
        .model
        .weights()
        .iter()
        .map(|w| format!("{w:.4}"))
        .collect();
    println!(
        "{} after {} iterations: loss={loss:.6} pi=[{}] degenerate_rows={}",
        if result.converged { "converged" } else { "stopped" },
        result.iterations,
        weights.join(", "),
        result.degeneracy_count,
    );

    let json = result.to_json().map_err(|e| CliError::Run(e.to_string()))?;
    write_file(&args.out, &json)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let family = Family::parse(&args.family).map_err(|e| CliError::Input(e.to_string()))?;
    let spec =
        SyntheticSpec::new(family, args.d).map_err(|e| CliError::Input(e.to_string()))?;
    println!(
        "simulate: family={} d={} n={} seed={} out={}",
        family.name(),
        args.d,
        args.n,
        args.seed,
        args.out.display()
    );
    let labeled =
        npmix::sample(&spec, args.n, args.seed).map_err(|e| CliError::Input(e.to_string()))?;
    write_file(&args.out, &csvio::labeled_sample_csv(&labeled))?;
    println!("wrote {} ({} rows)", args.out.display(), args.n);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let families = args
        .families
        .iter()
        .map(|f| Family::parse(f))
        .collect::<npmix::Result<Vec<_>>>()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let workers = match std::env::var(WORKERS_ENV) {
        Ok(text) => Some(text.parse::<usize>().map_err(|_| {
            CliError::Input(format!("{WORKERS_ENV}={text} is not a thread count"))
        })?),
        Err(_) => None,
    };
    let config = BenchConfig {
        families,
        sizes: args.sizes.clone(),
        replications: args.reps,
        epsilon: args.epsilon,
        restarts: args.restarts,
        seed: args.seed,
        grid_points: args.grid,
        max_iters: args.max_iters,
        loss_tol: args.tol,
        workers,
    };
    config
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;

    let detail_out = args
        .detail_out
        .clone()
        .unwrap_or_else(|| derive_detail_path(&args.out));
    println!(
        "bench: families={} sizes={:?} reps={} epsilon={} seed={} restarts={} grid={} max_iters={} tol={:e} workers={} out={} detail_out={}",
        config
            .families
            .iter()
            .map(|f| f.name())
            .collect::<Vec<_>>()
            .join(","),
        config.sizes,
        config.replications,
        config.epsilon,
        config.seed,
        config.restarts,
        config.grid_points,
        config.max_iters,
        config.loss_tol,
        workers.map_or_else(|| "default".into(), |w| w.to_string()),
        args.out.display(),
        detail_out.display(),
    );

    let report = npmix_bench::run_bench(&config).map_err(|e| CliError::Run(e.to_string()))?;
    print!("{}", npmix_bench::render_tables(&report));
    write_file(&args.out, &npmix_bench::summary_csv(&report))?;
    write_file(&detail_out, &npmix_bench::detail_csv(&report))?;
    println!("wrote {} and {}", args.out.display(), detail_out.display());

    if report.any_flagged() {
        return Err(CliError::Run(format!(
            "a benchmark cell exceeded the {}% failure threshold",
            (npmix_bench::FAILURE_ALERT * 100.0) as u32
        )));
    }
    Ok(())
}

fn parse_bandwidth(text: &str) -> Result<Bandwidth, CliError> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(Bandwidth::Auto);
    }
    match text.parse::<f64>() {
        Ok(h) if h.is_finite() && h > 0.0 => Ok(Bandwidth::Fixed(h)),
        _ => Err(CliError::Input(format!(
            "--bandwidth must be 'auto' or a positive number, got '{text}'"
        ))),
    }
}

fn parse_init(text: &str) -> Result<InitMethod, CliError> {
    match text.to_ascii_lowercase().as_str() {
        "kmeans" => Ok(InitMethod::KMeansLike),
        "random" => Ok(InitMethod::RandomResponsibilities),
        other => Err(CliError::Input(format!(
            "--init must be 'kmeans' or 'random', got '{other}'"
        ))),
    }
}

fn derive_detail_path(summary: &Path) -> PathBuf {
    let stem = summary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "bench".into());
    let ext = summary
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    summary.with_file_name(format!("{stem}_by_component.{ext}"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Input(format!("writing {}: {e}", path.display())))
}
