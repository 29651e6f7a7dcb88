//! The predict subcommand: per-example probabilities and the predicted
//! label as JSON lines. Labels in the input are optional and ignored.

use crate::common::{self, ProviderSpec};
use clap::Args;
use musem_core::checkpoint::load_checkpoint;
use musem_core::dataset::ingest_for_prediction;
use musem_core::model::{embed_prepared, predict, prepare_example};
use musem_core::{MusemError, Result};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,

    /// Canonical JSON-lines data; the label field may be absent.
    #[arg(long)]
    data: PathBuf,

    /// Embedding table; its dimension must match the checkpoint's.
    #[arg(long)]
    embeddings: PathBuf,

    /// Synthetic headline source: 'lead-k:<n>' or 'file:<path>'.
    #[arg(long, default_value_t)]
    provider: ProviderSpec,

    /// Predictions destination [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct PredictionLine<'a> {
    id: &'a str,
    p_congruent: f64,
    p_incongruent: f64,
    predicted_label: u8,
}

pub fn run(args: &PredictArgs) -> Result<()> {
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
    common::require_exists(&args.data, "data")?;
    let examples = ingest_for_prediction(&args.data)?;
    let provider = args.provider.build()?;

    let mut text = String::new();
    for example in &examples {
        let prep = prepare_example(example, &provider, &table, checkpoint.config.max_len)?;
        let enc = embed_prepared(&prep, &table)?;
        let p = predict(&checkpoint.params, &enc)?;
        let line = PredictionLine {
            id: &example.id,
            p_congruent: p.p_congruent,
            p_incongruent: p.p_incongruent,
            predicted_label: p.label,
        };
        text.push_str(
            &serde_json::to_string(&line)
                .map_err(|e| MusemError::Config(format!("serialize prediction: {e}")))?,
        );
        text.push('\n');
    }
    common::emit(args.out.as_deref(), &text)
}
