//! `gomp` command-line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "gomp", version, about = "Generalized OMP solvers, recovery-bound checks and Monte-Carlo sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Recover one sparse signal from a matrix and measurements (or a generated instance).
    Solve(Common),
    /// MSE against SNR for OMP, gOMP, Oracle-LS and linear MMSE.
    SweepMse(Common),
    /// Wall time against sparsity rate.
    SweepTime(Common),
    /// Error ratios for compressible (power-law) signals.
    Compressible(Common),
    /// Run the randomized inequality corpora.
    VerifyTheory(Common),
    /// Estimate a restricted isometry constant.
    Ric(Common),
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// TOML (or `.json`) configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the sweeps (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
