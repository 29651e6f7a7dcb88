//! Text pipeline: tokenization, the frozen embedding table and padded token
//! sequences.
//!
//! Tokenization is deliberately simple and total: lowercase the input, emit
//! maximal alphanumeric runs as tokens, and emit every other non-whitespace
//! character as its own single-character token. Punctuation therefore always
//! separates, including marks embedded inside a word ("milk—bad" splits in
//! three). Out-of-vocabulary tokens embed to the zero vector.

use crate::error::{MusemError, Result};
use crate::tensor::Mat;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars().flat_map(|c| c.to_lowercase()) {
        if ch.is_alphanumeric() {
            current.push(ch);
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Token vectors loaded from a pretrained embedding file. The table is frozen:
/// nothing in training ever writes to it. Unknown tokens and padding share an
/// all-zero vector that lives outside the stored rows.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    rows: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
    zero: Vec<f64>,
}

impl EmbeddingTable {
    pub fn from_rows(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(MusemError::Empty("embedding table".into()));
        }
        let dim = entries[0].1.len();
        let mut tokens = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        let mut index = HashMap::new();
        for (token, row) in entries {
            if row.len() != dim {
                return Err(MusemError::Shape {
                    context: format!("embedding row for '{token}'"),
                    expected: format!("{dim} values"),
                    got: format!("{}", row.len()),
                });
            }
            match index.get(&token) {
                Some(&at) => rows[at] = row,
                None => {
                    index.insert(token.clone(), rows.len());
                    tokens.push(token);
                    rows.push(row);
                }
            }
        }
        Ok(EmbeddingTable {
            dim,
            tokens,
            rows,
            index,
            zero: vec![0.0; dim],
        })
    }

    /// Reads the plain-text format: one entry per line, the token followed by
    /// its vector components, all whitespace-separated. The dimension is fixed
    /// by the first line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let file = File::open(path).map_err(|e| MusemError::io(shown.clone(), e))?;
        let reader = BufReader::new(file);
        let mut entries = Vec::new();
        let mut dim: Option<usize> = None;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| MusemError::io(shown.clone(), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap().to_string();
            let mut row = Vec::new();
            for field in fields {
                let v: f64 = field.parse().map_err(|_| {
                    MusemError::parse(&shown, lineno, format!("bad float '{field}'"))
                })?;
                if !v.is_finite() {
                    return Err(MusemError::parse(
                        &shown,
                        lineno,
                        format!("non-finite component '{field}'"),
                    ));
                }
                row.push(v);
            }
            match dim {
                None => {
                    if row.is_empty() {
                        return Err(MusemError::parse(
                            &shown,
                            lineno,
                            "entry has a token but no vector components",
                        ));
                    }
                    dim = Some(row.len());
                }
                Some(d) if row.len() != d => {
                    return Err(MusemError::parse(
                        &shown,
                        lineno,
                        format!("expected {d} components, got {}", row.len()),
                    ));
                }
                _ => {}
            }
            entries.push((token, row));
        }
        EmbeddingTable::from_rows(entries)
    }

    /// Writes the same plain-text format `load` reads. Round-trips exactly:
    /// components are printed with enough digits to recover the f64 bits.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let file = File::create(path).map_err(|e| MusemError::io(shown.clone(), e))?;
        let mut w = BufWriter::new(file);
        for (token, row) in self.tokens.iter().zip(&self.rows) {
            write!(w, "{token}").map_err(|e| MusemError::io(shown.clone(), e))?;
            for v in row {
                write!(w, " {}", ryu_style(*v)).map_err(|e| MusemError::io(shown.clone(), e))?;
            }
            writeln!(w).map_err(|e| MusemError::io(shown.clone(), e))?;
        }
        Ok(())
    }

    /// Persists the token-to-row mapping as a tab-separated sidecar so other
    /// tools can interpret serialized id sequences.
    pub fn write_vocab_sidecar(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let file = File::create(path).map_err(|e| MusemError::io(shown.clone(), e))?;
        let mut w = BufWriter::new(file);
        for (i, token) in self.tokens.iter().enumerate() {
            writeln!(w, "{token}\t{i}").map_err(|e| MusemError::io(shown.clone(), e))?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row id for unknown tokens. Not a stored row; resolves to zeros.
    pub fn unk_id(&self) -> usize {
        self.rows.len()
    }

    /// Row id for padding positions. Not a stored row; resolves to zeros.
    pub fn pad_id(&self) -> usize {
        self.rows.len() + 1
    }

    pub fn id_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(self.unk_id())
    }

    pub fn vector(&self, id: usize) -> Result<&[f64]> {
        if id < self.rows.len() {
            Ok(&self.rows[id])
        } else if id <= self.pad_id() {
            Ok(&self.zero)
        } else {
            Err(MusemError::Shape {
                context: "embedding lookup".into(),
                expected: format!("id <= {}", self.pad_id()),
                got: format!("{id}"),
            })
        }
    }
}

/// Shortest decimal representation that parses back to the identical f64.
fn ryu_style(v: f64) -> String {
    let mut s = format!("{v}");
    if s.parse::<f64>() != Ok(v) {
        s = format!("{v:?}");
    }
    s
}

/// A tokenized text padded (or front-truncated) to a fixed length.
/// Invariants: all three fields have the same length, and `mask[i]` is true
/// exactly on the leading real-token positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub ids: Vec<usize>,
    pub mask: Vec<bool>,
}

impl TokenSequence {
    /// Tokenizes `text` and fits it to `max_len`: longer inputs keep their
    /// first `max_len` tokens, shorter ones pad at the tail. Errors when the
    /// text produces no tokens at all.
    pub fn build(text: &str, max_len: usize, table: &EmbeddingTable) -> Result<Self> {
        if max_len == 0 {
            return Err(MusemError::Config("max_len must be at least 1".into()));
        }
        let mut tokens = tokenize(text);
        if tokens.is_empty() {
            return Err(MusemError::Empty(format!(
                "no tokens in text '{}'",
                truncate_for_message(text)
            )));
        }
        tokens.truncate(max_len);
        let real = tokens.len();
        let mut ids: Vec<usize> = tokens.iter().map(|t| table.id_of(t)).collect();
        let mut mask = vec![true; real];
        tokens.resize(max_len, String::new());
        ids.resize(max_len, table.pad_id());
        mask.resize(max_len, false);
        Ok(TokenSequence { tokens, ids, mask })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn real_len(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// The real (unpadded) token strings.
    pub fn real_tokens(&self) -> Vec<String> {
        self.tokens[..self.real_len()].to_vec()
    }
}

fn truncate_for_message(text: &str) -> String {
    let mut s: String = text.chars().take(40).collect();
    if text.chars().count() > 40 {
        s.push_str("...");
    }
    s
}

/// Looks up each sequence position in the table, producing a `len x dim`
/// matrix with zero rows at padding, plus the validity mask.
pub fn embed_sequence(seq: &TokenSequence, table: &EmbeddingTable) -> Result<(Mat, Vec<bool>)> {
    let mut h = Mat::zeros(seq.len(), table.dim());
    for (i, &id) in seq.ids.iter().enumerate() {
        let row = table.vector(id)?;
        h.row_mut(i).copy_from_slice(row);
    }
    Ok((h, seq.mask.clone()))
}
