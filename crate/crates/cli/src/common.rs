//! Shared plumbing for the subcommands: dataset loading across formats,
//! provider specs, seed resolution, path checks and exit-code mapping.

use clap::ValueEnum;
use musem_core::dataset::{self, ExamplePair};
use musem_core::provider::SyntheticHeadlineSource;
use musem_core::text::EmbeddingTable;
use musem_core::{MusemError, Result};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Exit code for an error: 1 for logical failures found while computing
/// (undefined metrics, numeric blowups), 2 for bad inputs or configuration.
pub fn exit_code(e: &MusemError) -> u8 {
    match e {
        MusemError::MetricUndefined(_)
        | MusemError::NonFiniteLoss { .. }
        | MusemError::NonFinite { .. }
        | MusemError::GradCheckFailed { .. }
        | MusemError::EmptySoftmax => 1,
        _ => 2,
    }
}

pub fn require_exists(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(MusemError::Config(format!(
            "{what} path does not exist: {}",
            path.display()
        )))
    }
}

/// Seed precedence: explicit flag, then config file, then MUSEM_SEED, then
/// the built-in default.
pub fn resolve_seed(flag: Option<u64>, config_file: Option<u64>, default: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = config_file {
        return Ok(s);
    }
    match std::env::var("MUSEM_SEED") {
        Ok(raw) => raw
            .parse()
            .map_err(|_| MusemError::Config(format!("MUSEM_SEED is not an integer: '{raw}'"))),
        Err(_) => Ok(default),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    /// JSON lines of {id, headline, body, label, synthetic_headline?}.
    Canonical,
    /// Clickbait-challenge instances file; requires --truth.
    Clickbait,
}

/// Loads a dataset in either format. Returns the examples and, for the
/// clickbait join, how many instances lacked a truth record.
pub fn load_dataset(
    data: &Path,
    format: DataFormat,
    truth: Option<&Path>,
) -> Result<(Vec<ExamplePair>, usize)> {
    require_exists(data, "data")?;
    match format {
        DataFormat::Canonical => {
            if truth.is_some() {
                return Err(MusemError::Config(
                    "--truth only applies to --format clickbait".into(),
                ));
            }
            Ok((dataset::ingest_canonical(data)?, 0))
        }
        DataFormat::Clickbait => {
            let truth = truth
                .ok_or_else(|| MusemError::Config("--format clickbait requires --truth".into()))?;
            require_exists(truth, "truth")?;
            dataset::ingest_clickbait_challenge(data, truth)
        }
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    require_exists(path, "embeddings")?;
    EmbeddingTable::load(path)
}

/// Provider spec grammar: `lead-k:<n>` or `file:<path>`.
#[derive(Debug, Clone)]
pub struct ProviderSpec(String);

impl FromStr for ProviderSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.starts_with("lead-k:") || s.starts_with("file:") {
            Ok(ProviderSpec(s.to_string()))
        } else {
            Err(format!("expected 'lead-k:<n>' or 'file:<path>', got '{s}'"))
        }
    }
}

impl Default for ProviderSpec {
    fn default() -> Self {
        ProviderSpec("lead-k:1".into())
    }
}

impl std::fmt::Display for ProviderSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl ProviderSpec {
    pub fn build(&self) -> Result<SyntheticHeadlineSource> {
        if let Some(k) = self.0.strip_prefix("lead-k:") {
            let k: usize = k
                .parse()
                .map_err(|_| MusemError::Config(format!("bad lead-k count '{k}'")))?;
            SyntheticHeadlineSource::lead_k(k)
        } else if let Some(path) = self.0.strip_prefix("file:") {
            let path = PathBuf::from(path);
            require_exists(&path, "provider file")?;
            SyntheticHeadlineSource::from_file(path)
        } else {
            Err(MusemError::Config(format!(
                "bad provider spec '{}'",
                self.0
            )))
        }
    }
}

/// Writes `text` to the path, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| MusemError::io(path.display().to_string(), e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
