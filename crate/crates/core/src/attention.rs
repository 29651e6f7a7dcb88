//! Word-pair attention between the original headline and the synthetic one.
//!
//! Every (original word q, synthetic word r) pair gets a scalar score
//! `C[q][r] = theta . feature(e_q, e_r) + bias`, where the feature is chosen
//! by the variant: the elementwise difference, the elementwise product, the
//! concatenation, or all three clubbed together in the order
//! `[product | concatenation | difference]`. Pooling the score matrix along
//! each axis and softmaxing yields mutual attention weights over both word
//! sequences, and the weighted sums of the embeddings are the attended
//! representations.
//!
//! Masked positions never contribute: their scores are excluded from pooling,
//! their attention weights are exactly zero, and the backward pass routes no
//! gradient through them.

use crate::error::{MusemError, Result};
use crate::tensor::{dot, masked_softmax, masked_softmax_backward, Mat, ParamTensor};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionVariant {
    Diff,
    Dot,
    Concat,
    Clubbed,
}

impl AttentionVariant {
    pub fn all() -> [AttentionVariant; 4] {
        [
            AttentionVariant::Diff,
            AttentionVariant::Dot,
            AttentionVariant::Concat,
            AttentionVariant::Clubbed,
        ]
    }

    /// Length of the pair feature for embedding dimension `d`.
    pub fn feature_len(&self, d: usize) -> usize {
        match self {
            AttentionVariant::Diff | AttentionVariant::Dot => d,
            AttentionVariant::Concat => 2 * d,
            AttentionVariant::Clubbed => 4 * d,
        }
    }

    /// Canonical parameter names, one pair per variant.
    pub fn theta_name(&self) -> &'static str {
        match self {
            AttentionVariant::Diff => "theta_diff",
            AttentionVariant::Dot => "theta_dot",
            AttentionVariant::Concat => "theta_con",
            AttentionVariant::Clubbed => "theta_dpc",
        }
    }

    pub fn bias_name(&self) -> &'static str {
        match self {
            AttentionVariant::Diff => "b_diff",
            AttentionVariant::Dot => "b_dot",
            AttentionVariant::Concat => "b_con",
            AttentionVariant::Clubbed => "b_dpc",
        }
    }
}

impl fmt::Display for AttentionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AttentionVariant::Diff => "diff",
            AttentionVariant::Dot => "dot",
            AttentionVariant::Concat => "concat",
            AttentionVariant::Clubbed => "clubbed",
        };
        f.write_str(s)
    }
}

impl FromStr for AttentionVariant {
    type Err = MusemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "diff" => Ok(AttentionVariant::Diff),
            "dot" => Ok(AttentionVariant::Dot),
            "concat" => Ok(AttentionVariant::Concat),
            "clubbed" => Ok(AttentionVariant::Clubbed),
            other => Err(MusemError::Config(format!(
                "unknown attention variant '{other}' (expected diff, dot, concat or clubbed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Avg,
    Max,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Avg => "avg",
            Pooling::Max => "max",
        })
    }
}

impl FromStr for Pooling {
    type Err = MusemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "avg" => Ok(Pooling::Avg),
            "max" => Ok(Pooling::Max),
            other => Err(MusemError::Config(format!(
                "unknown pooling '{other}' (expected avg or max)"
            ))),
        }
    }
}

/// Feature vector for one word pair. The clubbed layout is
/// `[product | concatenation | difference]`; zeroing the leading slices of a
/// clubbed theta reproduces the difference variant exactly, because the zero
/// products accumulate as exact zeros ahead of the difference terms.
pub fn pair_feature(e_q: &[f64], e_r: &[f64], variant: AttentionVariant) -> Vec<f64> {
    match variant {
        AttentionVariant::Diff => e_q.iter().zip(e_r).map(|(a, b)| a - b).collect(),
        AttentionVariant::Dot => e_q.iter().zip(e_r).map(|(a, b)| a * b).collect(),
        AttentionVariant::Concat => {
            let mut f = Vec::with_capacity(2 * e_q.len());
            f.extend_from_slice(e_q);
            f.extend_from_slice(e_r);
            f
        }
        AttentionVariant::Clubbed => {
            let mut f = Vec::with_capacity(4 * e_q.len());
            f.extend(e_q.iter().zip(e_r).map(|(a, b)| a * b));
            f.extend_from_slice(e_q);
            f.extend_from_slice(e_r);
            f.extend(e_q.iter().zip(e_r).map(|(a, b)| a - b));
            f
        }
    }
}

fn check_inputs(
    h_o: &Mat,
    mask_o: &[bool],
    h_s: &Mat,
    mask_s: &[bool],
    theta: &[f64],
    variant: AttentionVariant,
) -> Result<()> {
    if h_o.cols() != h_s.cols() {
        return Err(MusemError::Shape {
            context: "attention embeddings".into(),
            expected: format!("matching dimension {}", h_o.cols()),
            got: format!("{}", h_s.cols()),
        });
    }
    if mask_o.len() != h_o.rows() || mask_s.len() != h_s.rows() {
        return Err(MusemError::Shape {
            context: "attention masks".into(),
            expected: format!("lengths {} and {}", h_o.rows(), h_s.rows()),
            got: format!("{} and {}", mask_o.len(), mask_s.len()),
        });
    }
    let want = variant.feature_len(h_o.cols());
    if theta.len() != want {
        return Err(MusemError::Shape {
            context: format!("theta for variant {variant}"),
            expected: format!("{want}"),
            got: format!("{}", theta.len()),
        });
    }
    if !mask_o.iter().any(|m| *m) {
        return Err(MusemError::Empty("original side fully masked".into()));
    }
    if !mask_s.iter().any(|m| *m) {
        return Err(MusemError::Empty("synthetic side fully masked".into()));
    }
    Ok(())
}

/// Pairwise score matrix, rows indexed by original tokens and columns by
/// synthetic tokens. Entries touching a masked position are left at zero and
/// must be excluded downstream via the masks.
pub fn score_matrix(
    h_o: &Mat,
    mask_o: &[bool],
    h_s: &Mat,
    mask_s: &[bool],
    theta: &[f64],
    bias: f64,
    variant: AttentionVariant,
) -> Result<Mat> {
    check_inputs(h_o, mask_o, h_s, mask_s, theta, variant)?;
    let mut c = Mat::zeros(h_o.rows(), h_s.rows());
    for q in 0..h_o.rows() {
        if !mask_o[q] {
            continue;
        }
        for r in 0..h_s.rows() {
            if !mask_s[r] {
                continue;
            }
            let f = pair_feature(h_o.row(q), h_s.row(r), variant);
            c.set(q, r, dot(theta, &f) + bias);
        }
    }
    Ok(c)
}

/// Pools the score matrix along each axis over unmasked entries, then
/// softmaxes into attention weights for the original and synthetic sides.
/// Ties under max pooling break toward the earlier index.
pub fn attention_weights(
    c: &Mat,
    mask_o: &[bool],
    mask_s: &[bool],
    pooling: Pooling,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (pooled_o, _) = pool_rows(c, mask_o, mask_s, pooling)?;
    let (pooled_s, _) = pool_cols(c, mask_o, mask_s, pooling)?;
    let a_o = masked_softmax(&pooled_o, mask_o)?;
    let a_s = masked_softmax(&pooled_s, mask_s)?;
    Ok((a_o, a_s))
}

fn pool_rows(
    c: &Mat,
    mask_o: &[bool],
    mask_s: &[bool],
    pooling: Pooling,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let n_s = mask_s.iter().filter(|m| **m).count();
    if n_s == 0 {
        return Err(MusemError::Empty("synthetic side fully masked".into()));
    }
    let mut pooled = vec![0.0; c.rows()];
    let mut argmax = vec![0usize; c.rows()];
    for q in 0..c.rows() {
        if !mask_o[q] {
            continue;
        }
        match pooling {
            Pooling::Avg => {
                let mut sum = 0.0;
                for r in 0..c.cols() {
                    if mask_s[r] {
                        sum += c.get(q, r);
                    }
                }
                pooled[q] = sum / n_s as f64;
            }
            Pooling::Max => {
                let mut best = f64::NEG_INFINITY;
                let mut best_r = 0;
                for r in 0..c.cols() {
                    if mask_s[r] && c.get(q, r) > best {
                        best = c.get(q, r);
                        best_r = r;
                    }
                }
                pooled[q] = best;
                argmax[q] = best_r;
            }
        }
    }
    Ok((pooled, argmax))
}

fn pool_cols(
    c: &Mat,
    mask_o: &[bool],
    mask_s: &[bool],
    pooling: Pooling,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let n_o = mask_o.iter().filter(|m| **m).count();
    if n_o == 0 {
        return Err(MusemError::Empty("original side fully masked".into()));
    }
    let mut pooled = vec![0.0; c.cols()];
    let mut argmax = vec![0usize; c.cols()];
    for r in 0..c.cols() {
        if !mask_s[r] {
            continue;
        }
        match pooling {
            Pooling::Avg => {
                let mut sum = 0.0;
                for q in 0..c.rows() {
                    if mask_o[q] {
                        sum += c.get(q, r);
                    }
                }
                pooled[r] = sum / n_o as f64;
            }
            Pooling::Max => {
                let mut best = f64::NEG_INFINITY;
                let mut best_q = 0;
                for q in 0..c.rows() {
                    if mask_o[q] && c.get(q, r) > best {
                        best = c.get(q, r);
                        best_q = q;
                    }
                }
                pooled[r] = best;
                argmax[r] = best_q;
            }
        }
    }
    Ok((pooled, argmax))
}

/// Weighted sum of embedding rows. Masked rows carry weight zero, so they add
/// nothing.
pub fn attended_representation(h: &Mat, weights: &[f64]) -> Vec<f64> {
    debug_assert_eq!(weights.len(), h.rows());
    let mut out = vec![0.0; h.cols()];
    for (q, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let row = h.row(q);
        for (o, v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
    out
}

/// Everything the attention stage produces, including what the backward pass
/// needs (pooled scores and, under max pooling, the selected indices).
#[derive(Debug, Clone)]
pub struct AttentionResult {
    pub c: Mat,
    pub a_o: Vec<f64>,
    pub a_s: Vec<f64>,
    pub m_ao: Vec<f64>,
    pub m_as: Vec<f64>,
    pub m_a: Vec<f64>,
    pub argmax_o: Vec<usize>,
    pub argmax_s: Vec<usize>,
}

pub fn attention_forward(
    h_o: &Mat,
    mask_o: &[bool],
    h_s: &Mat,
    mask_s: &[bool],
    theta: &[f64],
    bias: f64,
    variant: AttentionVariant,
    pooling: Pooling,
) -> Result<AttentionResult> {
    let c = score_matrix(h_o, mask_o, h_s, mask_s, theta, bias, variant)?;
    let (pooled_o, argmax_o) = pool_rows(&c, mask_o, mask_s, pooling)?;
    let (pooled_s, argmax_s) = pool_cols(&c, mask_o, mask_s, pooling)?;
    let a_o = masked_softmax(&pooled_o, mask_o)?;
    let a_s = masked_softmax(&pooled_s, mask_s)?;
    let m_ao = attended_representation(h_o, &a_o);
    let m_as = attended_representation(h_s, &a_s);
    let m_a: Vec<f64> = m_ao.iter().zip(&m_as).map(|(a, b)| a + b).collect();
    Ok(AttentionResult {
        c,
        a_o,
        a_s,
        m_ao,
        m_as,
        m_a,
        argmax_o,
        argmax_s,
    })
}

/// Accumulates d(loss)/d(theta) and d(loss)/d(bias) given the upstream
/// gradient on the combined attended representation. The embeddings are
/// frozen, so no gradient flows into them.
#[allow(clippy::too_many_arguments)]
pub fn attention_backward(
    res: &AttentionResult,
    h_o: &Mat,
    mask_o: &[bool],
    h_s: &Mat,
    mask_s: &[bool],
    variant: AttentionVariant,
    pooling: Pooling,
    d_m_a: &[f64],
    theta: &mut ParamTensor,
    bias: &mut ParamTensor,
) {
    // m_a = m_ao + m_as, and m_ao = sum_q a_o[q] h_o[q].
    let mut d_a_o = vec![0.0; mask_o.len()];
    for q in 0..mask_o.len() {
        if mask_o[q] {
            d_a_o[q] = dot(d_m_a, h_o.row(q));
        }
    }
    let mut d_a_s = vec![0.0; mask_s.len()];
    for r in 0..mask_s.len() {
        if mask_s[r] {
            d_a_s[r] = dot(d_m_a, h_s.row(r));
        }
    }

    let d_pooled_o = masked_softmax_backward(&res.a_o, &d_a_o, mask_o);
    let d_pooled_s = masked_softmax_backward(&res.a_s, &d_a_s, mask_s);

    let n_o = mask_o.iter().filter(|m| **m).count() as f64;
    let n_s = mask_s.iter().filter(|m| **m).count() as f64;
    let mut d_c = Mat::zeros(res.c.rows(), res.c.cols());
    match pooling {
        Pooling::Avg => {
            for q in 0..res.c.rows() {
                if !mask_o[q] {
                    continue;
                }
                let share = d_pooled_o[q] / n_s;
                for r in 0..res.c.cols() {
                    if mask_s[r] {
                        d_c.add_at(q, r, share);
                    }
                }
            }
            for r in 0..res.c.cols() {
                if !mask_s[r] {
                    continue;
                }
                let share = d_pooled_s[r] / n_o;
                for q in 0..res.c.rows() {
                    if mask_o[q] {
                        d_c.add_at(q, r, share);
                    }
                }
            }
        }
        Pooling::Max => {
            for q in 0..res.c.rows() {
                if mask_o[q] {
                    d_c.add_at(q, res.argmax_o[q], d_pooled_o[q]);
                }
            }
            for r in 0..res.c.cols() {
                if mask_s[r] {
                    d_c.add_at(res.argmax_s[r], r, d_pooled_s[r]);
                }
            }
        }
    }

    // C[q][r] = theta . F(q, r) + bias over unmasked pairs.
    let d_theta = theta.grad.row_mut(0);
    let mut d_bias = 0.0;
    for q in 0..res.c.rows() {
        if !mask_o[q] {
            continue;
        }
        for r in 0..res.c.cols() {
            if !mask_s[r] {
                continue;
            }
            let g = d_c.get(q, r);
            if g == 0.0 {
                continue;
            }
            let f = pair_feature(h_o.row(q), h_s.row(r), variant);
            for (dt, fv) in d_theta.iter_mut().zip(&f) {
                *dt += g * fv;
            }
            d_bias += g;
        }
    }
    bias.grad.add_at(0, 0, d_bias);
}
