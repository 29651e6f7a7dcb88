//! musem: train, evaluate and inspect the headline/body semantic matcher.
//!
//! Exit codes: 0 success, 1 logical failure (undefined metric, failed
//! gradient check, numeric blowup), 2 input or configuration error.

mod commands;
mod common;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "musem", version, about = "Headline/body incongruence matcher")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoints plus an epoch log.
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint on labeled data.
    Eval(commands::eval::EvalArgs),
    /// Emit per-example probabilities for (possibly unlabeled) data.
    Predict(commands::predict::PredictArgs),
    /// Verify analytic gradients against finite differences.
    Gradcheck(commands::gradcheck::GradcheckArgs),
    /// Dump per-example attention matrices as JSON and CSV.
    AttentionDump(commands::dump::DumpArgs),
    /// Report label balance and class weights for a dataset.
    IngestStats(commands::ingest::IngestArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Predict(args) => commands::predict::run(args),
        Command::Gradcheck(args) => commands::gradcheck::run(args),
        Command::AttentionDump(args) => commands::dump::run(args),
        Command::IngestStats(args) => commands::ingest::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(common::exit_code(&e))
        }
    }
}
