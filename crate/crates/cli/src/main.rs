//! `qdp`: private counting queries on simulated quantum datasets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qdp_core::Exec;

mod demo;
mod query;
mod reproduce;
mod sweep;

#[derive(Parser)]
#[command(name = "qdp", version, about = "Differentially private counting queries on quantum-encoded datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Answer one predicate query with the direct or amplitude-estimation mechanism.
    Query(query::QueryArgs),
    /// Regenerate the accounting table, scaling fits or median confidence.
    Reproduce(reproduce::ReproduceArgs),
    /// Run a query homomorphically under a quantum one-time pad.
    QotpDemo(demo::DemoArgs),
    /// Run a parameter grid and write one CSV row per trial.
    Sweep {
        /// Flat TOML grid description.
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Run trials on the current thread.
        #[arg(long)]
        sequential: bool,
    },
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Query(args) => query::run(args),
        Command::Reproduce(args) => reproduce::run(args),
        Command::QotpDemo(args) => demo::run(args),
        Command::Sweep { config, output, sequential } => sweep::run(&config, output.as_deref(), exec(sequential)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
