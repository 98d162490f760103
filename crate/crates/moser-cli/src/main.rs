//! Batch front-end: parse a problem configuration, run the bound
//! schedules, the normalization, and the flow verification, and emit
//! machine-readable reports.

mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "moser", version, about = "Time-dependent Moser normal forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON problem configuration.
    #[arg(long, global = true, default_value = "problem.json")]
    config: PathBuf,

    /// Output directory for reports and trajectory files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for the sample-point draws in residual checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the theoretical bound schedule for the configured problem.
    Schedule,
    /// Run the normalization and emit the ledger and bound checks.
    Normalize,
    /// Normalize, then verify the conjugacy numerically and export
    /// trajectories.
    Verify,
    /// Schedule, normalize, and verify.
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let cfg = match config::load(&cli.config) {
        Ok(cfg) => cfg,
        Err(errors) => {
            let obj = serde_json::json!({
                "error": "invalid configuration",
                "violations": errors,
            });
            eprintln!("{}", serde_json::to_string_pretty(&obj).unwrap());
            return ExitCode::from(1);
        }
    };

    let outcome = match cli.command {
        Command::Schedule => report::run_schedule(&cfg, &cli.out),
        Command::Normalize => report::run_normalize(&cfg, &cli.out, cli.seed, false),
        Command::Verify => report::run_normalize(&cfg, &cli.out, cli.seed, true),
        Command::All => report::run_all(&cfg, &cli.out, cli.seed),
    };

    match outcome {
        Ok(all_checks_hold) => {
            if all_checks_hold {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(err) => {
            let obj = serde_json::json!({
                "error": "engine failure",
                "detail": err.to_string(),
            });
            eprintln!("{}", serde_json::to_string_pretty(&obj).unwrap());
            ExitCode::from(2)
        }
    }
}
