//! The ingest-stats subcommand: parse a dataset, report label balance and
//! class weights, optionally re-emit it in the canonical format.

use crate::common::{self, DataFormat};
use clap::Args;
use musem_core::dataset::{class_weights, stats, write_canonical};
use musem_core::{MusemError, Result};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    data: PathBuf,

    #[arg(long, value_enum, default_value = "canonical")]
    format: DataFormat,

    /// Truth file (clickbait format only).
    #[arg(long)]
    truth: Option<PathBuf>,

    /// Also write the parsed examples as canonical JSON lines.
    #[arg(long)]
    emit_canonical: Option<PathBuf>,
}

#[derive(Serialize)]
struct StatsReport {
    total: usize,
    per_class: [usize; 2],
    /// Inverse-frequency weights, absent when a class is missing.
    class_weights: Option<[f64; 2]>,
    dropped_missing_truth: usize,
}

pub fn run(args: &IngestArgs) -> Result<()> {
    let (examples, dropped) = common::load_dataset(&args.data, args.format, args.truth.as_deref())?;
    let s = stats(&examples);
    let report = StatsReport {
        total: s.total,
        per_class: s.per_class,
        class_weights: class_weights(&examples).ok(),
        dropped_missing_truth: dropped,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| MusemError::Config(format!("serialize stats: {e}")))?;
    text.push('\n');
    print!("{text}");

    if let Some(out) = &args.emit_canonical {
        write_canonical(out, &examples)?;
        println!("wrote {} examples to {}", examples.len(), out.display());
    }
    Ok(())
}
