//! `ouexec`: solve, verify and stress-test optimal liquidation schedules.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Check;
use crate::config::{Overrides, RunConfig, Settings};
use crate::error::CliError;

/// Exit code when outputs were written but an internal check failed.
const CHECK_FAILED: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "ouexec", version, about = "Optimal liquidation under linear impact with a mean-reverting price")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver tolerance.
    #[arg(long, global = true, allow_negative_numbers = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct SimulationArgs {
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal schedule for the configured state.
    Solve,
    /// Discrete-time convergence study over `n_list`.
    Converge,
    /// Monte Carlo estimate of terminal cash under the optimal schedule.
    Simulate(SimulationArgs),
    /// Continuous, discrete, brute-force and Monte Carlo values side by side.
    Verify(SimulationArgs),
    /// Round-trip profit scan over `z_range`.
    Manipulate,
}

fn run(cli: Cli) -> Result<Vec<Check>, CliError> {
    let path = cli.config.ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let sim = match &cli.command {
        Command::Simulate(a) | Command::Verify(a) => SimulationArgs { paths: a.paths, steps: a.steps, seed: a.seed },
        _ => SimulationArgs::default(),
    };
    let overrides = Overrides { out: cli.out, tol: cli.tol, paths: sim.paths, steps: sim.steps, seed: sim.seed };
    let settings = Settings::resolve(RunConfig::load(&path)?, overrides)?;
    let result = match cli.command {
        Command::Solve => commands::cmd_solve(&settings),
        Command::Converge => commands::cmd_converge(&settings),
        Command::Simulate(_) => commands::cmd_simulate(&settings),
        Command::Verify(_) => commands::cmd_verify(&settings),
        Command::Manipulate => commands::cmd_manipulate(&settings),
    };
    if let Err(e) = &result {
        let failure = serde_json::to_string_pretty(&e.failure()).unwrap_or_default();
        if std::fs::create_dir_all(&settings.out).is_ok() {
            let _ = std::fs::write(settings.out.join("error.json"), format!("{failure}\n"));
        }
    }
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(checks) => {
            let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
            for c in &failed {
                eprintln!("check failed: {} ({})", c.name, c.detail);
            }
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(CHECK_FAILED)
            }
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.failure()).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
