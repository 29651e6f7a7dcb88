//! Joint layer and output head.
//!
//! The attended representation and the sequence encoding are concatenated,
//! projected through one ReLU layer (with inverted dropout during training),
//! and mapped to two logits. The loss is softmax cross-entropy scaled by a
//! per-class weight, which counteracts label imbalance.

use crate::error::{MusemError, Result};
use crate::tensor::{concat, relu, ParamTensor};

#[derive(Debug, Clone)]
pub struct ClassifierParams {
    pub w_t: ParamTensor,
    pub b_t: ParamTensor,
    pub w_cl: ParamTensor,
    pub b_cl: ParamTensor,
}

impl ClassifierParams {
    /// All-zero parameters mapping a `d`-dim attended representation plus an
    /// `hidden`-dim encoding through a `joint`-dim ReLU layer to two logits.
    pub fn zeros(d: usize, hidden: usize, joint: usize) -> Self {
        ClassifierParams {
            w_t: ParamTensor::zeros("W_t", joint, d + hidden),
            b_t: ParamTensor::zeros("b_t", joint, 1),
            w_cl: ParamTensor::zeros("W_cl", 2, joint),
            b_cl: ParamTensor::zeros("b_cl", 2, 1),
        }
    }

    pub fn joint_dim(&self) -> usize {
        self.w_t.value.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_t.value.cols()
    }
}

/// Forward values the backward pass replays.
#[derive(Debug, Clone)]
pub struct ClassifierCache {
    z: Vec<f64>,
    pre: Vec<f64>,
    m: Vec<f64>,
    dropout: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ClassifierOutput {
    pub logits: [f64; 2],
    pub probs: [f64; 2],
    pub cache: ClassifierCache,
}

/// Two-class softmax, max-shifted for stability.
pub fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let sum = e0 + e1;
    [e0 / sum, e1 / sum]
}

/// Runs the head. `dropout` carries the inverted-dropout multipliers for the
/// joint layer (0 or 1/(1-rate) per unit); pass `None` at inference.
pub fn classifier_forward(
    params: &ClassifierParams,
    m_a: &[f64],
    m_e: &[f64],
    dropout: Option<&[f64]>,
) -> Result<ClassifierOutput> {
    let z = concat(m_a, m_e);
    if z.len() != params.input_dim() {
        return Err(MusemError::Shape {
            context: "classifier input".into(),
            expected: format!("{}", params.input_dim()),
            got: format!("{}", z.len()),
        });
    }
    let mut pre = params.w_t.value.matvec(&z);
    for (v, b) in pre.iter_mut().zip(params.b_t.value.data()) {
        *v += b;
    }
    let mut m: Vec<f64> = pre.iter().copied().map(relu).collect();
    if let Some(mult) = dropout {
        if mult.len() != m.len() {
            return Err(MusemError::Shape {
                context: "dropout multipliers".into(),
                expected: format!("{}", m.len()),
                got: format!("{}", mult.len()),
            });
        }
        for (v, k) in m.iter_mut().zip(mult) {
            *v *= k;
        }
    }
    let head = params.w_cl.value.matvec(&m);
    let logits = [
        head[0] + params.b_cl.value.get(0, 0),
        head[1] + params.b_cl.value.get(1, 0),
    ];
    let probs = softmax2(logits);
    Ok(ClassifierOutput {
        logits,
        probs,
        cache: ClassifierCache {
            z,
            pre,
            m,
            dropout: dropout.map(|d| d.to_vec()),
        },
    })
}

/// Class-weighted cross-entropy `-w_label * log p_label`, computed via
/// log-sum-exp so extreme logits stay finite.
pub fn weighted_cross_entropy(logits: [f64; 2], label: u8, class_weights: [f64; 2]) -> Result<f64> {
    if label > 1 {
        return Err(MusemError::Config(format!(
            "label must be 0 or 1, got {label}"
        )));
    }
    let m = logits[0].max(logits[1]);
    let log_sum = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    let log_p = logits[label as usize] - log_sum;
    Ok(-class_weights[label as usize] * log_p)
}

/// Gradient of the weighted cross-entropy with respect to the logits:
/// `w_label * (p_j - [j == label])`.
pub fn loss_backward(probs: [f64; 2], label: u8, class_weights: [f64; 2]) -> [f64; 2] {
    let w = class_weights[label as usize];
    let mut d = [w * probs[0], w * probs[1]];
    d[label as usize] -= w;
    d
}

/// Accumulates parameter gradients and returns the gradients on the two
/// input representations `(d_m_a, d_m_e)`.
pub fn classifier_backward(
    params: &mut ClassifierParams,
    cache: &ClassifierCache,
    d_logits: [f64; 2],
    d_len: usize,
) -> (Vec<f64>, Vec<f64>) {
    params.w_cl.grad.add_outer(&d_logits, &cache.m);
    params.b_cl.grad.add_at(0, 0, d_logits[0]);
    params.b_cl.grad.add_at(1, 0, d_logits[1]);

    let mut dm = params.w_cl.value.matvec_t(&d_logits);
    if let Some(mult) = &cache.dropout {
        for (v, k) in dm.iter_mut().zip(mult) {
            *v *= k;
        }
    }
    let dpre: Vec<f64> = dm
        .iter()
        .zip(&cache.pre)
        .map(|(g, p)| if *p > 0.0 { *g } else { 0.0 })
        .collect();

    params.w_t.grad.add_outer(&dpre, &cache.z);
    for (k, g) in dpre.iter().enumerate() {
        params.b_t.grad.add_at(k, 0, *g);
    }

    let dz = params.w_t.value.matvec_t(&dpre);
    let d_m_a = dz[..d_len].to_vec();
    let d_m_e = dz[d_len..].to_vec();
    (d_m_a, d_m_e)
}
