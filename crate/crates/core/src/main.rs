use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use fragmenta::run::{run, Mode, RunOptions};

/// Simulate spatial fragmentation birth-and-death processes and solve their
/// correlation-function hierarchy.
#[derive(Parser)]
#[command(name = "fragmenta", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration, or a manifest from a previous run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for replicas and grid loops.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write gnuplot scripts next to the CSV outputs.
    #[arg(long, global = true)]
    emit_plots: bool,
    /// Parent directory for the run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run Gillespie replicas and write snapshot and estimator tables.
    Simulate,
    /// Certified truncated Duhamel series at the configured end time.
    SolveSeries,
    /// Fourth-order Runge-Kutta integration of the truncated hierarchy.
    SolveRk4,
    /// Series, RK4 and simulation side by side.
    Compare,
    /// Randomized oracle suites.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = std::env::var("FRAGMENTA_LOG").unwrap_or_else(|_| "warn".into());
    env_logger::Builder::new().parse_filters(&level).init();

    let mode = match cli.command {
        Command::Simulate => Mode::Simulate,
        Command::SolveSeries => Mode::SolveSeries,
        Command::SolveRk4 => Mode::SolveRk4,
        Command::Compare => Mode::Compare,
        Command::Validate => Mode::Validate,
    };
    let opts = RunOptions {
        mode,
        config: cli.config,
        jobs: cli.jobs,
        seed: cli.seed,
        emit_plots: cli.emit_plots,
        out: cli.out,
    };
    match run(&opts).with_context(|| format!("{} failed", mode.name())) {
        Ok(outcome) => {
            print!("{}", outcome.table());
            if let Some(dir) = &outcome.dir {
                println!("outputs: {}", dir.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            let code = e.downcast_ref::<fragmenta::run::RunError>().map(|r| r.exit_code()).unwrap_or(1);
            eprintln!("error: {e:#}");
            ExitCode::from(code as u8)
        }
    }
}
