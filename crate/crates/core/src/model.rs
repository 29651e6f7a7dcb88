//! The full matcher: attention, sequence encoder and classifier head wired
//! together over one example, with a single backward pass that accumulates
//! gradients for every trainable tensor. Embeddings are frozen, so examples
//! only enter as precomputed embedding matrices plus masks.

use crate::attention::{
    attention_backward, attention_forward, AttentionResult, AttentionVariant, Pooling,
};
use crate::classifier::{
    classifier_backward, classifier_forward, loss_backward, weighted_cross_entropy,
    ClassifierOutput, ClassifierParams,
};
use crate::dataset::ExamplePair;
use crate::error::Result;
use crate::lstm::{encode, encode_backward, LstmCache, LstmParams};
use crate::provider::SyntheticHeadlineSource;
use crate::tensor::{Mat, ParamSet, ParamTensor};
use crate::text::{embed_sequence, EmbeddingTable, TokenSequence};
use serde::Serialize;

/// Every trainable tensor plus the structural choices that fix their shapes.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub variant: AttentionVariant,
    pub pooling: Pooling,
    pub synthetic_first: bool,
    pub theta: ParamTensor,
    pub bias: ParamTensor,
    pub lstm: LstmParams,
    pub classifier: ClassifierParams,
}

impl ModelParams {
    /// Zero-valued parameters for the given shape. The joint layer width
    /// matches the LSTM hidden size.
    pub fn zeros(
        variant: AttentionVariant,
        pooling: Pooling,
        synthetic_first: bool,
        d: usize,
        hidden: usize,
    ) -> Self {
        ModelParams {
            variant,
            pooling,
            synthetic_first,
            theta: ParamTensor::zeros(variant.theta_name(), 1, variant.feature_len(d)),
            bias: ParamTensor::zeros(variant.bias_name(), 1, 1),
            lstm: LstmParams::zeros(hidden, d),
            classifier: ClassifierParams::zeros(d, hidden, hidden),
        }
    }

    pub fn d(&self) -> usize {
        self.lstm.input_dim()
    }

    pub fn hidden(&self) -> usize {
        self.lstm.hidden()
    }
}

impl ParamSet for ModelParams {
    fn for_each(&self, f: &mut dyn FnMut(&ParamTensor)) {
        f(&self.theta);
        f(&self.bias);
        f(&self.lstm.w_f);
        f(&self.lstm.w_i);
        f(&self.lstm.w_c);
        f(&self.lstm.w_o);
        f(&self.lstm.b_f);
        f(&self.lstm.b_i);
        f(&self.lstm.b_c);
        f(&self.lstm.b_o);
        f(&self.classifier.w_t);
        f(&self.classifier.b_t);
        f(&self.classifier.w_cl);
        f(&self.classifier.b_cl);
    }

    fn for_each_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        f(&mut self.theta);
        f(&mut self.bias);
        f(&mut self.lstm.w_f);
        f(&mut self.lstm.w_i);
        f(&mut self.lstm.w_c);
        f(&mut self.lstm.w_o);
        f(&mut self.lstm.b_f);
        f(&mut self.lstm.b_i);
        f(&mut self.lstm.b_c);
        f(&mut self.lstm.b_o);
        f(&mut self.classifier.w_t);
        f(&mut self.classifier.b_t);
        f(&mut self.classifier.w_cl);
        f(&mut self.classifier.b_cl);
    }
}

/// One example tokenized against a fixed table, before embedding.
#[derive(Debug, Clone)]
pub struct PreparedExample {
    pub id: String,
    pub label: u8,
    pub seq_o: TokenSequence,
    pub seq_s: TokenSequence,
}

/// Tokenizes the original headline and the synthetic one. A pre-generated
/// synthetic headline on the example wins over the provider.
pub fn prepare_example(
    example: &ExamplePair,
    provider: &SyntheticHeadlineSource,
    table: &EmbeddingTable,
    max_len: usize,
) -> Result<PreparedExample> {
    let synthetic = match &example.synthetic_headline {
        Some(s) => s.clone(),
        None => provider.provide(&example.id, &example.body)?,
    };
    Ok(PreparedExample {
        id: example.id.clone(),
        label: example.label,
        seq_o: TokenSequence::build(&example.headline, max_len, table)?,
        seq_s: TokenSequence::build(&synthetic, max_len, table)?,
    })
}

/// Embedding matrices plus masks for one example.
#[derive(Debug, Clone)]
pub struct ExampleEncoding {
    pub h_o: Mat,
    pub mask_o: Vec<bool>,
    pub h_s: Mat,
    pub mask_s: Vec<bool>,
}

pub fn embed_prepared(prep: &PreparedExample, table: &EmbeddingTable) -> Result<ExampleEncoding> {
    let (h_o, mask_o) = embed_sequence(&prep.seq_o, table)?;
    let (h_s, mask_s) = embed_sequence(&prep.seq_s, table)?;
    Ok(ExampleEncoding {
        h_o,
        mask_o,
        h_s,
        mask_s,
    })
}

#[derive(Debug, Clone)]
pub struct ModelForward {
    pub attention: AttentionResult,
    pub m_e: Vec<f64>,
    pub output: ClassifierOutput,
    lstm_cache: LstmCache,
}

/// Runs the whole model on one encoded example. `dropout` carries frozen
/// inverted-dropout multipliers for the joint layer; `None` means inference.
pub fn model_forward(
    params: &ModelParams,
    enc: &ExampleEncoding,
    dropout: Option<&[f64]>,
) -> Result<ModelForward> {
    let attention = attention_forward(
        &enc.h_o,
        &enc.mask_o,
        &enc.h_s,
        &enc.mask_s,
        params.theta.value.row(0),
        params.bias.value.get(0, 0),
        params.variant,
        params.pooling,
    )?;
    let (m_e, lstm_cache) = encode(
        &params.lstm,
        &enc.h_o,
        &enc.mask_o,
        &enc.h_s,
        &enc.mask_s,
        params.synthetic_first,
    )?;
    let output = classifier_forward(&params.classifier, &attention.m_a, &m_e, dropout)?;
    Ok(ModelForward {
        attention,
        m_e,
        output,
        lstm_cache,
    })
}

/// Accumulates gradients of `scale * weighted_loss` for one example.
pub fn model_backward(
    params: &mut ModelParams,
    enc: &ExampleEncoding,
    fwd: &ModelForward,
    label: u8,
    class_weights: [f64; 2],
    scale: f64,
) {
    let mut d_logits = loss_backward(fwd.output.probs, label, class_weights);
    d_logits[0] *= scale;
    d_logits[1] *= scale;
    let d = params.d();
    let (d_m_a, d_m_e) =
        classifier_backward(&mut params.classifier, &fwd.output.cache, d_logits, d);
    encode_backward(&mut params.lstm, &fwd.lstm_cache, &d_m_e);
    attention_backward(
        &fwd.attention,
        &enc.h_o,
        &enc.mask_o,
        &enc.h_s,
        &enc.mask_s,
        params.variant,
        params.pooling,
        &d_m_a,
        &mut params.theta,
        &mut params.bias,
    );
}

/// Forward + loss + backward for one example. Returns the weighted loss;
/// gradient contributions are scaled by `scale` (1/batch size for a mean).
pub fn example_loss_and_grad(
    params: &mut ModelParams,
    enc: &ExampleEncoding,
    label: u8,
    class_weights: [f64; 2],
    dropout: Option<&[f64]>,
    scale: f64,
) -> Result<f64> {
    let fwd = model_forward(params, enc, dropout)?;
    let loss = weighted_cross_entropy(fwd.output.logits, label, class_weights)?;
    model_backward(params, enc, &fwd, label, class_weights, scale);
    Ok(loss)
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub label: u8,
    pub p_congruent: f64,
    pub p_incongruent: f64,
}

/// Inference on one encoded example. The label is 1 exactly when the
/// incongruent probability exceeds 0.5, so a tie predicts congruent.
pub fn predict(params: &ModelParams, enc: &ExampleEncoding) -> Result<Prediction> {
    let fwd = model_forward(params, enc, None)?;
    let [p_congruent, p_incongruent] = fwd.output.probs;
    Ok(Prediction {
        label: u8::from(p_incongruent > 0.5),
        p_congruent,
        p_incongruent,
    })
}
