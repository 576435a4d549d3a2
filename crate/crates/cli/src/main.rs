//! `polyfut`: simulate panels, fit models, price term structures and
//! benchmark matrix exponentials.
//!
//! Every command writes into its own output directory and echoes the fully
//! resolved configuration there as `config.json`; passing that file back
//! with `--config` reproduces the run.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "polyfut", version, about = "Two-factor commodity futures toolkit")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Shared {
    /// JSON config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `<command>-<unix time>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a futures panel.
    Simulate(commands::SimulateArgs),
    /// Fit a model to a panel by maximum likelihood.
    Fit(commands::FitArgs),
    /// Benchmark the matrix-exponential methods.
    ExpmBench(commands::BenchArgs),
    /// Futures term structure at a fixed state.
    Price(commands::PriceArgs),
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad config, flags or input files: exit 2.
    Config(String),
    /// The estimator failed: exit 3.
    Estimation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Estimation(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Estimation(m) => write!(f, "estimation failed: {m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.shared.threads {
        if n == 0 {
            eprintln!("config error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(&cli.shared, a),
        Command::Fit(a) => commands::fit(&cli.shared, a),
        Command::ExpmBench(a) => commands::expm_bench(&cli.shared, a),
        Command::Price(a) => commands::price(&cli.shared, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
