//! The eval subcommand: score a checkpoint against a labeled dataset and
//! print the metrics report as JSON.

use crate::common::{self, DataFormat, ProviderSpec};
use clap::Args;
use musem_core::checkpoint::load_checkpoint;
use musem_core::metrics::evaluate;
use musem_core::model::prepare_example;
use musem_core::{MusemError, Result};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,

    /// Labeled evaluation data.
    #[arg(long)]
    data: PathBuf,

    #[arg(long, value_enum, default_value = "canonical")]
    format: DataFormat,

    /// Truth file (clickbait format only).
    #[arg(long)]
    truth: Option<PathBuf>,

    /// Embedding table; its dimension must match the checkpoint's.
    #[arg(long)]
    embeddings: PathBuf,

    /// Synthetic headline source: 'lead-k:<n>' or 'file:<path>'.
    #[arg(long, default_value_t)]
    provider: ProviderSpec,

    /// Metrics JSON destination [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    common::require_exists(&args.checkpoint, "checkpoint")?;
    let checkpoint = load_checkpoint(&args.checkpoint)?;
    let table = common::load_embeddings(&args.embeddings)?;
    if table.dim() != checkpoint.config.d {
        return Err(MusemError::Shape {
            context: "embedding table vs checkpoint".into(),
            expected: format!("d = {}", checkpoint.config.d),
            got: format!("{}", table.dim()),
        });
    }
    let (examples, dropped) = common::load_dataset(&args.data, args.format, args.truth.as_deref())?;
    if dropped > 0 {
        eprintln!("warning: dropped {dropped} instances without a truth record");
    }
    let provider = args.provider.build()?;
    let prepared = examples
        .iter()
        .map(|e| prepare_example(e, &provider, &table, checkpoint.config.max_len))
        .collect::<Result<Vec<_>>>()?;

    let report = evaluate(&checkpoint.params, &table, &prepared)?;
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| MusemError::Config(format!("serialize metrics: {e}")))?;
    text.push('\n');
    common::emit(args.out.as_deref(), &text)
}
