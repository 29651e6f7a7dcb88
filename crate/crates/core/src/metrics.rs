//! Evaluation metrics. Macro F1 comes from plain confusion-matrix
//! arithmetic; AUC uses the rank statistic (average ranks for ties), which
//! equals exhaustive ordered-pair counting.

use crate::error::{MusemError, Result};
use crate::model::{embed_prepared, predict, ModelParams, PreparedExample};
use crate::text::EmbeddingTable;
use serde::Serialize;

/// Precision, recall and F1 for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Full evaluation summary. `confusion[actual][predicted]` counts examples;
/// the four cells sum to `n_examples`. `per_class[c]` scores class `c`.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub macro_f1: f64,
    pub auc: f64,
    pub per_class: [ClassScores; 2],
    pub confusion: [[usize; 2]; 2],
    pub n_examples: usize,
}

fn check_binary(values: &[u8], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(MusemError::Empty(format!("{what} list")));
    }
    for &v in values {
        if v > 1 {
            return Err(MusemError::Config(format!(
                "{what} must be 0 or 1, got {v}"
            )));
        }
    }
    Ok(())
}

/// Counts `confusion[actual][predicted]` over paired label/prediction lists.
pub fn confusion_counts(labels: &[u8], preds: &[u8]) -> Result<[[usize; 2]; 2]> {
    check_binary(labels, "labels")?;
    check_binary(preds, "predictions")?;
    if labels.len() != preds.len() {
        return Err(MusemError::Config(format!(
            "got {} labels but {} predictions",
            labels.len(),
            preds.len()
        )));
    }
    let mut confusion = [[0usize; 2]; 2];
    for (&l, &p) in labels.iter().zip(preds) {
        confusion[l as usize][p as usize] += 1;
    }
    Ok(confusion)
}

/// Per-class precision/recall/F1 from a confusion matrix. Undefined ratios
/// (empty denominators) score 0, including F1 when precision + recall = 0.
pub fn class_scores(confusion: &[[usize; 2]; 2]) -> [ClassScores; 2] {
    let mut out = [ClassScores {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    }; 2];
    for (c, scores) in out.iter_mut().enumerate() {
        let tp = confusion[c][c] as f64;
        let predicted = (confusion[0][c] + confusion[1][c]) as f64;
        let actual = (confusion[c][0] + confusion[c][1]) as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        *scores = ClassScores {
            precision,
            recall,
            f1,
        };
    }
    out
}

/// Unweighted mean of the two per-class F1 scores.
pub fn macro_f1(labels: &[u8], preds: &[u8]) -> Result<f64> {
    let scores = class_scores(&confusion_counts(labels, preds)?);
    Ok((scores[0].f1 + scores[1].f1) / 2.0)
}

/// ROC AUC: the fraction of (positive, negative) pairs ranked correctly by
/// score, counting ties as half. Computed via average ranks, so tied groups
/// contribute exactly 0.5 per crossing pair.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    check_binary(labels, "labels")?;
    if labels.len() != scores.len() {
        return Err(MusemError::Config(format!(
            "got {} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    for &s in scores {
        if !s.is_finite() {
            return Err(MusemError::NonFinite {
                context: "auc score".into(),
            });
        }
    }
    let n = labels.len();
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MusemError::MetricUndefined(
            "AUC undefined: only one class present".into(),
        ));
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // 1-based ranks; each tied group shares its average rank, which is a
    // half-integer and therefore exact in f64.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            if labels[k] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Runs the model over every example and scores predictions against labels.
/// The AUC score for an example is its incongruent-class probability.
pub fn evaluate(
    params: &ModelParams,
    table: &EmbeddingTable,
    examples: &[PreparedExample],
) -> Result<MetricsReport> {
    if examples.is_empty() {
        return Err(MusemError::Empty("evaluation set".into()));
    }
    let mut labels = Vec::with_capacity(examples.len());
    let mut preds = Vec::with_capacity(examples.len());
    let mut scores = Vec::with_capacity(examples.len());
    for ex in examples {
        let enc = embed_prepared(ex, table)?;
        let p = predict(params, &enc)?;
        labels.push(ex.label);
        preds.push(p.label);
        scores.push(p.p_incongruent);
    }
    let confusion = confusion_counts(&labels, &preds)?;
    let per_class = class_scores(&confusion);
    Ok(MetricsReport {
        macro_f1: (per_class[0].f1 + per_class[1].f1) / 2.0,
        auc: auc(&labels, &scores)?,
        per_class,
        confusion,
        n_examples: examples.len(),
    })
}
