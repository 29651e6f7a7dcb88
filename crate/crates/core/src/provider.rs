//! Sources for the synthetic headline: a stand-in headline generated from the
//! body so the matcher can compare "what the headline says" against "what the
//! body would say about itself".
//!
//! Two sources are supported. `LeadK` takes the first k sentences of the body,
//! which is a strong extractive baseline for news text. `FileBacked` reads
//! pre-generated headlines keyed by example id, for plugging in an external
//! abstractive generator without this crate knowing anything about it.

use crate::error::{MusemError, Result};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

/// Splits on '.', '!' or '?' when followed by whitespace or end of text, so a
/// run like "?!" stays with its sentence. A trailing fragment without a
/// terminator counts as a sentence. This is a naive splitter by design.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        if matches!(c, '.' | '!' | '?') {
            let at_end = k + 1 == chars.len();
            let next_is_space = chars.get(k + 1).map(|(_, n)| n.is_whitespace()) == Some(true);
            if at_end || next_is_space {
                let end = i + c.len_utf8();
                let s = text[start..end].trim();
                if !s.is_empty() {
                    sentences.push(s.to_string());
                }
                start = end;
            }
        }
    }
    if start < bytes.len() {
        let s = text[start..].trim();
        if !s.is_empty() {
            sentences.push(s.to_string());
        }
    }
    sentences
}

/// Where synthetic headlines come from.
#[derive(Debug, Clone)]
pub enum SyntheticHeadlineSource {
    /// First `k` sentences of the body, joined with single spaces.
    LeadK { k: usize },
    /// Pre-generated headlines looked up by example id.
    FileBacked { by_id: HashMap<String, String> },
}

impl SyntheticHeadlineSource {
    pub fn lead_k(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(MusemError::Config("lead-k requires k >= 1".into()));
        }
        Ok(SyntheticHeadlineSource::LeadK { k })
    }

    /// Loads a JSONL file of records `{"id": ..., "synthetic_headline": ...}`.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let file = File::open(path).map_err(|e| MusemError::io(shown.clone(), e))?;
        let mut by_id = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| MusemError::io(shown.clone(), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(&line)
                .map_err(|e| MusemError::parse(&shown, lineno, format!("bad json: {e}")))?;
            let id = value
                .get("id")
                .and_then(|v| v.as_str())
                .ok_or_else(|| MusemError::parse(&shown, lineno, "missing string field 'id'"))?;
            let headline = value
                .get("synthetic_headline")
                .and_then(|v| v.as_str())
                .ok_or_else(|| {
                    MusemError::parse(&shown, lineno, "missing string field 'synthetic_headline'")
                })?;
            if headline.trim().is_empty() {
                return Err(MusemError::parse(
                    &shown,
                    lineno,
                    "synthetic_headline is empty",
                ));
            }
            if by_id.insert(id.to_string(), headline.to_string()).is_some() {
                return Err(MusemError::parse(
                    &shown,
                    lineno,
                    format!("duplicate id '{id}'"),
                ));
            }
        }
        if by_id.is_empty() {
            return Err(MusemError::Empty(format!(
                "synthetic headline file {shown}"
            )));
        }
        Ok(SyntheticHeadlineSource::FileBacked { by_id })
    }

    /// Produces the synthetic headline for one example. `LeadK` clips k to the
    /// number of sentences actually present.
    pub fn provide(&self, id: &str, body: &str) -> Result<String> {
        match self {
            SyntheticHeadlineSource::LeadK { k } => {
                let sentences = split_sentences(body);
                if sentences.is_empty() {
                    return Err(MusemError::Empty(format!("body of example {id}")));
                }
                let take = (*k).min(sentences.len());
                Ok(sentences[..take].join(" "))
            }
            SyntheticHeadlineSource::FileBacked { by_id } => by_id
                .get(id)
                .cloned()
                .ok_or_else(|| MusemError::MissingSynthetic { id: id.to_string() }),
        }
    }
}
