//! The train subcommand: ingest, train, persist checkpoints and the epoch
//! log. Flags mirror the config file keys and win over them.

use crate::common::{self, DataFormat, ProviderSpec};
use clap::Args;
use musem_core::attention::{AttentionVariant, Pooling};
use musem_core::checkpoint::save_checkpoint;
use musem_core::train::{TrainConfig, Trainer};
use musem_core::{MusemError, Result};
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training data file.
    #[arg(long)]
    data: PathBuf,

    #[arg(long, value_enum, default_value = "canonical")]
    format: DataFormat,

    /// Truth file (clickbait format only).
    #[arg(long)]
    truth: Option<PathBuf>,

    /// Pretrained embedding table: one token plus components per line.
    #[arg(long)]
    embeddings: PathBuf,

    /// Synthetic headline source: 'lead-k:<n>' or 'file:<path>'.
    #[arg(long, default_value_t)]
    provider: ProviderSpec,

    /// JSON config file; absent keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Final checkpoint path.
    #[arg(long)]
    checkpoint_out: PathBuf,

    /// Best-epoch checkpoint path [default: <checkpoint-out>.best].
    #[arg(long)]
    best_out: Option<PathBuf>,

    /// JSON-lines epoch log path [default: <checkpoint-out>.log].
    #[arg(long)]
    log_out: Option<PathBuf>,

    #[arg(long)]
    learning_rate: Option<f64>,

    #[arg(long)]
    batch_size: Option<usize>,

    #[arg(long)]
    hidden: Option<usize>,

    /// Embedding dimension [default: the table's own dimension].
    #[arg(long)]
    d: Option<usize>,

    #[arg(long)]
    dropout: Option<f64>,

    #[arg(long)]
    max_len: Option<usize>,

    #[arg(long)]
    epochs: Option<usize>,

    /// Seed; falls back to the config file, then MUSEM_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,

    /// Attention variant: diff, dot, concat or clubbed.
    #[arg(long)]
    variant: Option<AttentionVariant>,

    /// Score pooling: avg or max.
    #[arg(long)]
    pooling: Option<Pooling>,

    /// Feed the synthetic headline to the encoder first.
    #[arg(long)]
    synthetic_first: bool,
}

/// Merges config file and flags into a validated TrainConfig. `table_dim`
/// fills `d` when neither source names it.
fn assemble_config(args: &TrainArgs, table_dim: usize) -> Result<TrainConfig> {
    let (mut config, file_keys) = match &args.config {
        Some(path) => {
            common::require_exists(path, "config")?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| MusemError::io(path.display().to_string(), e))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| MusemError::Config(format!("bad config file: {e}")))?;
            let keys: Vec<String> = value
                .as_object()
                .map(|o| o.keys().cloned().collect())
                .unwrap_or_default();
            (TrainConfig::from_json(&text)?, keys)
        }
        None => (TrainConfig::default(), Vec::new()),
    };
    let file_has = |k: &str| file_keys.iter().any(|s| s == k);

    if let Some(v) = args.learning_rate {
        config.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        config.batch_size = v;
    }
    if let Some(v) = args.hidden {
        config.hidden = v;
    }
    if let Some(v) = args.dropout {
        config.dropout = v;
    }
    if let Some(v) = args.max_len {
        config.max_len = v;
    }
    if let Some(v) = args.epochs {
        config.epochs = v;
    }
    if let Some(v) = args.variant {
        config.variant = v;
    }
    if let Some(v) = args.pooling {
        config.pooling = v;
    }
    if args.synthetic_first {
        config.synthetic_first = true;
    }
    config.d = match args.d {
        Some(v) => v,
        None if file_has("d") => config.d,
        None => table_dim,
    };
    let file_seed = file_has("seed").then_some(config.seed);
    config.seed = common::resolve_seed(args.seed, file_seed, config.seed)?;
    config.validate()?;
    Ok(config)
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let table = common::load_embeddings(&args.embeddings)?;
    let (examples, dropped) = common::load_dataset(&args.data, args.format, args.truth.as_deref())?;
    if dropped > 0 {
        eprintln!("warning: dropped {dropped} instances without a truth record");
    }
    let provider = args.provider.build()?;
    let config = assemble_config(args, table.dim())?;

    let mut trainer = Trainer::new(&examples, &provider, table, config.clone())?;
    let (n_train, n_val) = trainer.split_sizes();
    println!("training on {n_train} examples, validating on {n_val}");
    for _ in 0..config.epochs {
        let line = trainer.run_epoch()?;
        println!(
            "{}",
            serde_json::to_string(&line)
                .map_err(|e| MusemError::Config(format!("serialize epoch log: {e}")))?
        );
    }
    let outcome = trainer.finish();

    save_checkpoint(
        &args.checkpoint_out,
        &outcome.params,
        &config,
        config.epochs,
    )?;
    let best_out = args
        .best_out
        .clone()
        .unwrap_or_else(|| suffixed(&args.checkpoint_out, ".best"));
    save_checkpoint(&best_out, &outcome.best_params, &config, outcome.best_epoch)?;

    let log_out = args
        .log_out
        .clone()
        .unwrap_or_else(|| suffixed(&args.checkpoint_out, ".log"));
    let mut log_text = Vec::new();
    for line in &outcome.log {
        serde_json::to_writer(&mut log_text, line)
            .map_err(|e| MusemError::Config(format!("serialize epoch log: {e}")))?;
        log_text.write_all(b"\n").expect("vec write");
    }
    std::fs::write(&log_out, log_text)
        .map_err(|e| MusemError::io(log_out.display().to_string(), e))?;

    println!(
        "wrote {} (final), {} (best epoch {}), {} (log)",
        args.checkpoint_out.display(),
        best_out.display(),
        outcome.best_epoch,
        log_out.display()
    );
    Ok(())
}

fn suffixed(path: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}
