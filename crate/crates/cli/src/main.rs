//! `cocyclelab` — config-driven experiments on matrix cocycles.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 numeric
//! breakdown (unresolved singular gaps, missed returns, degenerate data).

mod experiments;
mod fixtures;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cocyclelab::LabError;
use experiments::ExperimentConfig;

#[derive(Parser)]
#[command(name = "cocyclelab", version, about = "matrix cocycle laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the experiment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Ensemble worker threads (default: available cores). Results do not
    /// depend on this.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for summary.json and samples.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov spectrum via QR recursion, with the norm-growth oracle.
    Spectrum(RunArgs),
    /// Stationary measure estimate, properness and contraction diagnostics.
    Stationary(RunArgs),
    /// Kakutani induced system and spectrum rescaling check.
    Induce(RunArgs),
    /// Free-group boundary: harmonic measure, martingale, skew invariance.
    Boundary(RunArgs),
    /// Finite-horizon Oseledets flags, frames, and equivariance defects.
    Flags(RunArgs),
    /// Skew-product ergodicity against exact product averages.
    Skew(RunArgs),
    /// List the bundled reference experiments.
    Fixtures {
        /// Write the fixture configs into a directory.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

enum CliError {
    Validation(String),
    Numeric(String),
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> CliError {
        match e {
            LabError::InvalidConfig(_) | LabError::WindowTooSmall { .. } => {
                CliError::Validation(e.to_string())
            }
            LabError::InsufficientGap { .. }
            | LabError::ReturnCapExceeded { .. }
            | LabError::EmptyIndicator
            | LabError::NumericalBreakdown(_)
            | LabError::NotTransverse { .. }
            | LabError::DegenerateTuple { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(a) => run_experiment(a, "spectrum"),
        Command::Stationary(a) => run_experiment(a, "stationary"),
        Command::Induce(a) => run_experiment(a, "induce"),
        Command::Boundary(a) => run_experiment(a, "boundary"),
        Command::Flags(a) => run_experiment(a, "flags"),
        Command::Skew(a) => run_experiment(a, "skew"),
        Command::Fixtures { write } => run_fixtures(write.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run_experiment(args: &RunArgs, expected_kind: &str) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.config.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.config.display())))?;
    if config.kind() != expected_kind {
        return Err(CliError::Validation(format!(
            "config is a {:?} experiment, invoked as {expected_kind:?}",
            config.kind()
        )));
    }
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    let out_dir: PathBuf = args
        .out
        .clone()
        .or_else(|| config.out().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let artifacts = match args.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Validation(e.to_string()))?;
            pool.install(|| config.run())
        }
        None => config.run(),
    }?;

    let mut json_bytes = serde_json::to_vec_pretty(&artifacts.summary)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    json_bytes.push(b'\n');
    output::write_atomic(&out_dir, "summary.json", &json_bytes)
        .map_err(|e| CliError::Validation(format!("writing summary.json: {e}")))?;
    output::write_atomic(&out_dir, "samples.csv", &artifacts.csv.into_bytes())
        .map_err(|e| CliError::Validation(format!("writing samples.csv: {e}")))?;
    println!("{}", artifacts.line);
    Ok(())
}

fn run_fixtures(write: Option<&Path>) -> Result<(), CliError> {
    print!("{}", fixtures::table());
    if let Some(dir) = write {
        for f in fixtures::all() {
            output::write_atomic(dir, &format!("{}.json", f.name), f.json.as_bytes())
                .map_err(|e| CliError::Validation(format!("writing {}: {e}", f.name)))?;
        }
        println!("wrote {} fixture configs to {}", fixtures::all().len(), dir.display());
    }
    Ok(())
}
