//! The attention-dump subcommand: per-example score matrices and attention
//! weights, as JSON plus a CSV heatmap with original tokens down the rows
//! and synthetic tokens across the columns. Padded positions are omitted.

use crate::common::{self, DataFormat, ProviderSpec};
use clap::Args;
use musem_core::attention::attention_forward;
use musem_core::checkpoint::load_checkpoint;
use musem_core::model::{embed_prepared, prepare_example};
use musem_core::{MusemError, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    checkpoint: PathBuf,

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

    /// Directory for the per-example <id>.json and <id>.csv files.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct DumpRecord {
    id: String,
    variant: String,
    pooling: String,
    original_tokens: Vec<String>,
    synthetic_tokens: Vec<String>,
    /// Score matrix rows follow `original_tokens`, columns `synthetic_tokens`.
    c: Vec<Vec<f64>>,
    a_o: Vec<f64>,
    a_s: Vec<f64>,
    m_a: Vec<f64>,
}

/// Keeps ids usable as file names.
fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn csv_cell(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn run(args: &DumpArgs) -> Result<()> {
    common::require_exists(&args.checkpoint, "checkpoint")?;
    let checkpoint = load_checkpoint(&args.checkpoint)?;
    let config = &checkpoint.config;
    let table = common::load_embeddings(&args.embeddings)?;
    if table.dim() != config.d {
        return Err(MusemError::Shape {
            context: "embedding table vs checkpoint".into(),
            expected: format!("d = {}", config.d),
            got: format!("{}", table.dim()),
        });
    }
    let (examples, dropped) = common::load_dataset(&args.data, args.format, args.truth.as_deref())?;
    if dropped > 0 {
        eprintln!("warning: dropped {dropped} instances without a truth record");
    }
    let provider = args.provider.build()?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| MusemError::io(args.out_dir.display().to_string(), e))?;

    for example in &examples {
        let prep = prepare_example(example, &provider, &table, config.max_len)?;
        let enc = embed_prepared(&prep, &table)?;
        let res = attention_forward(
            &enc.h_o,
            &enc.mask_o,
            &enc.h_s,
            &enc.mask_s,
            checkpoint.params.theta.value.row(0),
            checkpoint.params.bias.value.get(0, 0),
            config.variant,
            config.pooling,
        )?;

        let n_o = prep.seq_o.real_len();
        let n_s = prep.seq_s.real_len();
        let original_tokens: Vec<String> = prep.seq_o.tokens[..n_o].to_vec();
        let synthetic_tokens: Vec<String> = prep.seq_s.tokens[..n_s].to_vec();
        let c: Vec<Vec<f64>> = (0..n_o).map(|q| res.c.row(q)[..n_s].to_vec()).collect();

        let record = DumpRecord {
            id: example.id.clone(),
            variant: config.variant.to_string(),
            pooling: config.pooling.to_string(),
            original_tokens: original_tokens.clone(),
            synthetic_tokens: synthetic_tokens.clone(),
            c: c.clone(),
            a_o: res.a_o[..n_o].to_vec(),
            a_s: res.a_s[..n_s].to_vec(),
            m_a: res.m_a.clone(),
        };

        let stem = sanitize(&example.id);
        let json_path = args.out_dir.join(format!("{stem}.json"));
        let mut json = serde_json::to_string_pretty(&record)
            .map_err(|e| MusemError::Config(format!("serialize dump: {e}")))?;
        json.push('\n');
        std::fs::write(&json_path, json)
            .map_err(|e| MusemError::io(json_path.display().to_string(), e))?;

        let mut csv = String::new();
        for tok in &synthetic_tokens {
            let _ = write!(csv, ",{}", csv_cell(tok));
        }
        csv.push('\n');
        for (q, row) in c.iter().enumerate() {
            csv.push_str(&csv_cell(&original_tokens[q]));
            for v in row {
                let _ = write!(csv, ",{v}");
            }
            csv.push('\n');
        }
        let csv_path = args.out_dir.join(format!("{stem}.csv"));
        std::fs::write(&csv_path, csv)
            .map_err(|e| MusemError::io(csv_path.display().to_string(), e))?;
    }
    println!(
        "wrote {} example dumps to {}",
        examples.len(),
        args.out_dir.display()
    );
    Ok(())
}
