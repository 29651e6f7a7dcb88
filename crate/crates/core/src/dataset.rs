//! Dataset ingestion. Everything funnels into one canonical in-memory form:
//! a labeled (headline, body) pair, optionally carrying a pre-generated
//! synthetic headline.
//!
//! Label 0 means congruent (the headline matches the body), label 1 means
//! incongruent. Adapters exist for the canonical JSONL format, for the
//! clickbait challenge release (instances + truth files joined on id), and for
//! a news corpus already converted to canonical form.

use crate::error::{MusemError, Result};
use serde::Serialize;
use serde_json::Value;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const CONGRUENT: u8 = 0;
pub const INCONGRUENT: u8 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExamplePair {
    pub id: String,
    pub headline: String,
    pub body: String,
    pub label: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_headline: Option<String>,
}

/// Totals per label, in label order: `per_class[0]` counts congruent examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub total: usize,
    pub per_class: [usize; 2],
}

pub fn stats(examples: &[ExamplePair]) -> IngestStats {
    let mut per_class = [0usize; 2];
    for e in examples {
        per_class[e.label as usize] += 1;
    }
    IngestStats {
        total: examples.len(),
        per_class,
    }
}

/// Inverse-frequency class weights `w_c = total / (2 * count_c)`, so a
/// balanced dataset gets [1, 1] and the rarer class is weighted up. Errors
/// when either class is absent.
pub fn class_weights(examples: &[ExamplePair]) -> Result<[f64; 2]> {
    let s = stats(examples);
    for (c, &n) in s.per_class.iter().enumerate() {
        if n == 0 {
            return Err(MusemError::Empty(format!(
                "no examples with label {c}; class weights undefined"
            )));
        }
    }
    Ok([
        s.total as f64 / (2.0 * s.per_class[0] as f64),
        s.total as f64 / (2.0 * s.per_class[1] as f64),
    ])
}

fn label_from_value(v: &Value) -> std::result::Result<u8, String> {
    match v {
        Value::Number(n) => match n.as_u64() {
            Some(0) => Ok(CONGRUENT),
            Some(1) => Ok(INCONGRUENT),
            _ => Err(format!("label must be 0 or 1, got {n}")),
        },
        Value::String(s) => match s.to_ascii_lowercase().as_str() {
            "0" | "congruent" => Ok(CONGRUENT),
            "1" | "incongruent" => Ok(INCONGRUENT),
            other => Err(format!(
                "label must be 0, 1, 'congruent' or 'incongruent', got '{other}'"
            )),
        },
        other => Err(format!("label has unsupported type: {other}")),
    }
}

fn required_str<'a>(v: &'a Value, field: &str) -> std::result::Result<&'a str, String> {
    let s = v
        .get(field)
        .and_then(Value::as_str)
        .ok_or_else(|| format!("missing string field '{field}'"))?;
    if s.trim().is_empty() {
        return Err(format!("field '{field}' is empty"));
    }
    Ok(s)
}

fn read_jsonl(path: &Path) -> Result<Vec<(usize, Value)>> {
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| MusemError::io(shown.clone(), e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| MusemError::io(shown.clone(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| MusemError::parse(&shown, lineno, format!("bad json: {e}")))?;
        records.push((lineno, value));
    }
    Ok(records)
}

/// Reads the canonical JSONL format: one object per line with `id`,
/// `headline`, `body`, `label` and optional `synthetic_headline`. Labels may
/// be 0/1 numbers or the strings "congruent"/"incongruent" (any case).
pub fn ingest_canonical(path: impl AsRef<Path>) -> Result<Vec<ExamplePair>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut examples = Vec::new();
    for (lineno, value) in read_jsonl(path)? {
        let fail = |msg: String| MusemError::parse(&shown, lineno, msg);
        let id = required_str(&value, "id").map_err(fail)?;
        let headline = required_str(&value, "headline").map_err(fail)?;
        let body = required_str(&value, "body").map_err(fail)?;
        let label = value
            .get("label")
            .ok_or_else(|| fail("missing field 'label'".into()))
            .and_then(|v| label_from_value(v).map_err(fail))?;
        let synthetic_headline = match value.get("synthetic_headline") {
            None | Some(Value::Null) => None,
            Some(_) => Some(
                required_str(&value, "synthetic_headline")
                    .map_err(fail)?
                    .into(),
            ),
        };
        examples.push(ExamplePair {
            id: id.into(),
            headline: headline.into(),
            body: body.into(),
            label,
            synthetic_headline,
        });
    }
    if examples.is_empty() {
        return Err(MusemError::Empty(format!("dataset {shown}")));
    }
    Ok(examples)
}

/// Reads canonical JSONL for prediction, where `label` is optional (it is
/// ignored downstream); records without one get label 0 as a placeholder.
pub fn ingest_for_prediction(path: impl AsRef<Path>) -> Result<Vec<ExamplePair>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut examples = Vec::new();
    for (lineno, value) in read_jsonl(path)? {
        let fail = |msg: String| MusemError::parse(&shown, lineno, msg);
        let id = required_str(&value, "id").map_err(fail)?;
        let headline = required_str(&value, "headline").map_err(fail)?;
        let body = required_str(&value, "body").map_err(fail)?;
        let label = match value.get("label") {
            None | Some(Value::Null) => 0,
            Some(v) => label_from_value(v).map_err(fail)?,
        };
        let synthetic_headline = match value.get("synthetic_headline") {
            None | Some(Value::Null) => None,
            Some(_) => Some(
                required_str(&value, "synthetic_headline")
                    .map_err(fail)?
                    .into(),
            ),
        };
        examples.push(ExamplePair {
            id: id.into(),
            headline: headline.into(),
            body: body.into(),
            label,
            synthetic_headline,
        });
    }
    if examples.is_empty() {
        return Err(MusemError::Empty(format!("dataset {shown}")));
    }
    Ok(examples)
}

/// Reads the clickbait challenge release: an instances file with the posted
/// text and target paragraphs, and a truth file with `truthClass`. The post
/// text becomes the headline, the paragraphs join into the body, and
/// clickbait maps to incongruent. Instances without a truth record are
/// dropped; the second return value counts them so callers can warn.
pub fn ingest_clickbait_challenge(
    instances: impl AsRef<Path>,
    truth: impl AsRef<Path>,
) -> Result<(Vec<ExamplePair>, usize)> {
    let truth = truth.as_ref();
    let truth_shown = truth.display().to_string();
    let mut labels: HashMap<String, u8> = HashMap::new();
    for (lineno, value) in read_jsonl(truth)? {
        let fail = |msg: String| MusemError::parse(&truth_shown, lineno, msg);
        let id = required_str(&value, "id").map_err(fail)?;
        let class = required_str(&value, "truthClass").map_err(fail)?;
        let label = match class.to_ascii_lowercase().as_str() {
            "clickbait" => INCONGRUENT,
            "no-clickbait" => CONGRUENT,
            other => return Err(fail(format!("unknown truthClass '{other}'"))),
        };
        labels.insert(id.to_string(), label);
    }

    let instances = instances.as_ref();
    let inst_shown = instances.display().to_string();
    let mut examples = Vec::new();
    let mut missing_truth = 0usize;
    for (lineno, value) in read_jsonl(instances)? {
        let fail = |msg: String| MusemError::parse(&inst_shown, lineno, msg);
        let id = required_str(&value, "id").map_err(fail)?;
        let headline = join_text_field(&value, "postText").map_err(fail)?;
        let body = join_text_field(&value, "targetParagraphs").map_err(fail)?;
        let Some(&label) = labels.get(id) else {
            missing_truth += 1;
            continue;
        };
        examples.push(ExamplePair {
            id: id.into(),
            headline,
            body,
            label,
            synthetic_headline: None,
        });
    }
    if examples.is_empty() {
        return Err(MusemError::Empty(format!("dataset {inst_shown}")));
    }
    Ok((examples, missing_truth))
}

/// Accepts either a plain string or an array of strings, joined with single
/// spaces; the result must be non-empty.
fn join_text_field(value: &Value, field: &str) -> std::result::Result<String, String> {
    let joined = match value.get(field) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(parts)) => {
            let mut pieces = Vec::with_capacity(parts.len());
            for p in parts {
                match p.as_str() {
                    Some(s) if !s.trim().is_empty() => pieces.push(s.trim()),
                    Some(_) => {}
                    None => return Err(format!("field '{field}' contains a non-string entry")),
                }
            }
            pieces.join(" ")
        }
        Some(_) => return Err(format!("field '{field}' must be a string or string array")),
        None => return Err(format!("missing field '{field}'")),
    };
    if joined.trim().is_empty() {
        return Err(format!("field '{field}' is empty"));
    }
    Ok(joined)
}

/// Reads a news corpus already converted to the canonical format and reports
/// its label balance alongside the examples.
pub fn ingest_nela17(path: impl AsRef<Path>) -> Result<(Vec<ExamplePair>, IngestStats)> {
    let examples = ingest_canonical(path)?;
    let s = stats(&examples);
    Ok((examples, s))
}

/// Writes examples in the canonical JSONL format `ingest_canonical` reads.
pub fn write_canonical(path: impl AsRef<Path>, examples: &[ExamplePair]) -> Result<()> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = File::create(path).map_err(|e| MusemError::io(shown.clone(), e))?;
    let mut w = BufWriter::new(file);
    for e in examples {
        let line = serde_json::to_string(e)
            .map_err(|e| MusemError::Config(format!("serialize example: {e}")))?;
        writeln!(w, "{line}").map_err(|e| MusemError::io(shown.clone(), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(path: &Path, text: &str) {
        std::fs::write(path, text).unwrap();
    }

    #[test]
    fn canonical_accepts_numeric_and_string_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        write(
            &path,
            r#"{"id":"a","headline":"h one","body":"b one.","label":0}
{"id":"b","headline":"h two","body":"b two.","label":"Incongruent"}
{"id":"c","headline":"h three","body":"b three.","label":"1","synthetic_headline":"s three"}
"#,
        );
        let ex = ingest_canonical(&path).unwrap();
        assert_eq!(ex.len(), 3);
        assert_eq!(ex[0].label, CONGRUENT);
        assert_eq!(ex[1].label, INCONGRUENT);
        assert_eq!(ex[2].synthetic_headline.as_deref(), Some("s three"));
    }

    #[test]
    fn canonical_rejects_bad_records_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");

        write(
            &path,
            "{\"id\":\"a\",\"headline\":\"h\",\"body\":\"b\",\"label\":2}\n",
        );
        let err = ingest_canonical(&path).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
        assert!(err.to_string().contains("label"), "{err}");

        write(
            &path,
            "{\"id\":\"a\",\"headline\":\"h\",\"body\":\"b\",\"label\":0}\nnot json\n",
        );
        let err = ingest_canonical(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");

        write(
            &path,
            "{\"id\":\"a\",\"headline\":\"  \",\"body\":\"b\",\"label\":0}\n",
        );
        let err = ingest_canonical(&path).unwrap_err();
        assert!(err.to_string().contains("'headline' is empty"), "{err}");

        write(&path, "\n\n");
        assert!(ingest_canonical(&path).is_err());
    }

    #[test]
    fn canonical_round_trips_through_writer() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let examples = vec![
            ExamplePair {
                id: "a".into(),
                headline: "h one".into(),
                body: "b one.".into(),
                label: 0,
                synthetic_headline: None,
            },
            ExamplePair {
                id: "b".into(),
                headline: "h two".into(),
                body: "b two.".into(),
                label: 1,
                synthetic_headline: Some("pre made".into()),
            },
        ];
        write_canonical(&path, &examples).unwrap();
        let back = ingest_canonical(&path).unwrap();
        assert_eq!(back, examples);
    }

    #[test]
    fn prediction_ingest_tolerates_missing_labels_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        write(
            &path,
            r#"{"id":"a","headline":"h one","body":"b one."}
{"id":"b","headline":"h two","body":"b two.","label":1}
"#,
        );
        let ex = ingest_for_prediction(&path).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].label, 0);
        assert_eq!(ex[1].label, 1);

        write(&path, "{\"id\":\"a\",\"body\":\"b.\"}\n");
        assert!(ingest_for_prediction(&path).is_err());
    }

    #[test]
    fn clickbait_joins_instances_with_truth() {
        let dir = tempfile::tempdir().unwrap();
        let inst = dir.path().join("instances.jsonl");
        let truth = dir.path().join("truth.jsonl");
        write(
            &inst,
            r#"{"id":"p1","postText":["You won't believe this"],"targetParagraphs":["First para.","Second para."]}
{"id":"p2","postText":["Budget passed"],"targetParagraphs":["The budget passed today."]}
"#,
        );
        write(
            &truth,
            r#"{"id":"p1","truthClass":"clickbait"}
{"id":"p2","truthClass":"no-clickbait"}
"#,
        );
        let (ex, dropped) = ingest_clickbait_challenge(&inst, &truth).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(dropped, 0);
        assert_eq!(ex[0].label, INCONGRUENT);
        assert_eq!(ex[0].headline, "You won't believe this");
        assert_eq!(ex[0].body, "First para. Second para.");
        assert_eq!(ex[1].label, CONGRUENT);
    }

    #[test]
    fn clickbait_drops_instances_without_truth_and_counts_them() {
        let dir = tempfile::tempdir().unwrap();
        let inst = dir.path().join("instances.jsonl");
        let truth = dir.path().join("truth.jsonl");
        write(
            &inst,
            r#"{"id":"p1","postText":["t one"],"targetParagraphs":["b one."]}
{"id":"orphan","postText":["t two"],"targetParagraphs":["b two."]}
"#,
        );
        write(&truth, "{\"id\":\"p1\",\"truthClass\":\"clickbait\"}\n");
        let (ex, dropped) = ingest_clickbait_challenge(&inst, &truth).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].id, "p1");
        assert_eq!(dropped, 1);

        // Every instance orphaned leaves nothing to train on.
        write(&truth, "{\"id\":\"other\",\"truthClass\":\"clickbait\"}\n");
        assert!(ingest_clickbait_challenge(&inst, &truth).is_err());
    }

    #[test]
    fn class_weights_follow_inverse_frequency() {
        let mk = |label, i: usize| ExamplePair {
            id: format!("e{i}"),
            headline: "h".into(),
            body: "b.".into(),
            label,
            synthetic_headline: None,
        };
        let mut examples: Vec<_> = (0..3).map(|i| mk(0, i)).collect();
        examples.push(mk(1, 3));
        let w = class_weights(&examples).unwrap();
        assert!((w[0] - 4.0 / 6.0).abs() < 1e-15);
        assert!((w[1] - 2.0).abs() < 1e-15);

        let balanced: Vec<_> = (0..4).map(|i| mk((i % 2) as u8, i)).collect();
        assert_eq!(class_weights(&balanced).unwrap(), [1.0, 1.0]);

        let single: Vec<_> = (0..2).map(|i| mk(0, i)).collect();
        assert!(class_weights(&single).is_err());
    }

    #[test]
    fn stats_count_per_class() {
        let mk = |label, i: usize| ExamplePair {
            id: format!("e{i}"),
            headline: "h".into(),
            body: "b.".into(),
            label,
            synthetic_headline: None,
        };
        let examples = vec![mk(0, 0), mk(1, 1), mk(0, 2)];
        let s = stats(&examples);
        assert_eq!(s.total, 3);
        assert_eq!(s.per_class, [2, 1]);
    }
}
