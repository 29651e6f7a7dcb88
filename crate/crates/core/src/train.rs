//! Training loop: seeded initialization, a stratified train/validation
//! split, shuffled mini-batches, Adam on the mean class-weighted loss, and
//! per-epoch validation metrics with best-epoch tracking.

use crate::attention::{AttentionVariant, Pooling};
use crate::dataset::ExamplePair;
use crate::error::{MusemError, Result};
use crate::metrics::{auc, class_scores, confusion_counts};
use crate::model::{
    embed_prepared, example_loss_and_grad, predict, prepare_example, ModelParams, PreparedExample,
};
use crate::optimizer::{Adam, AdamConfig};
use crate::provider::SyntheticHeadlineSource;
use crate::tensor::{dropout_mask, ParamSet};
use crate::text::EmbeddingTable;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn default_learning_rate() -> f64 {
    0.001
}
fn default_batch_size() -> usize {
    100
}
fn default_hidden() -> usize {
    100
}
fn default_d() -> usize {
    300
}
fn default_dropout() -> f64 {
    0.2
}
fn default_max_len() -> usize {
    50
}
fn default_epochs() -> usize {
    10
}
fn default_seed() -> u64 {
    42
}
fn default_variant() -> AttentionVariant {
    AttentionVariant::Diff
}
fn default_pooling() -> Pooling {
    Pooling::Avg
}

/// All knobs for one training run. The defaults are the published
/// hyperparameters; everything is overridable from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden: usize,
    pub d: usize,
    pub dropout: f64,
    pub max_len: usize,
    pub epochs: usize,
    pub seed: u64,
    pub variant: AttentionVariant,
    pub pooling: Pooling,
    /// Feed the synthetic headline to the encoder before the original one.
    pub synthetic_first: bool,
    pub optimizer: OptimizerSettings,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: default_learning_rate(),
            batch_size: default_batch_size(),
            hidden: default_hidden(),
            d: default_d(),
            dropout: default_dropout(),
            max_len: default_max_len(),
            epochs: default_epochs(),
            seed: default_seed(),
            variant: default_variant(),
            pooling: default_pooling(),
            synthetic_first: false,
            optimizer: OptimizerSettings::default(),
        }
    }
}

/// Adam moment decay and stabilizer settings; the learning rate lives on
/// [`TrainConfig`] directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let a = AdamConfig::default();
        OptimizerSettings {
            beta1: a.beta1,
            beta2: a.beta2,
            epsilon: a.epsilon,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.optimizer.beta1,
            beta2: self.optimizer.beta2,
            epsilon: self.optimizer.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("hidden", self.hidden),
            ("d", self.d),
            ("max_len", self.max_len),
        ] {
            if v == 0 {
                return Err(MusemError::Config(format!("{name} must be >= 1")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(MusemError::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        self.adam().validate()
    }

    /// Reads a JSON config file; absent keys keep their defaults, unknown
    /// keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: TrainConfig = serde_json::from_str(text)
            .map_err(|e| MusemError::Config(format!("bad train config: {e}")))?;
        config.validate()?;
        Ok(config)
    }
}

/// Fresh parameters for a config: weight matrices uniform in
/// +-sqrt(6/(fan_in+fan_out)) with fan_in the column count, biases zero
/// except the forget gate's, which opens at 1 so early training remembers.
/// Deterministic given the RNG state.
pub fn init_params(config: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<ModelParams> {
    config.validate()?;
    let mut params = ModelParams::zeros(
        config.variant,
        config.pooling,
        config.synthetic_first,
        config.d,
        config.hidden,
    );
    params.for_each_mut(&mut |t| {
        if t.name.starts_with('b') {
            if t.name == "b_f" {
                // Open forget gates keep early gradients flowing through time.
                t.value.fill(1.0);
            } else if t.name == "b_t" {
                // A small positive bias keeps the joint ReLU units initially
                // alive; units that start dead for a whole input direction
                // can stall training for long stretches.
                t.value.fill(0.1);
            }
        } else {
            // He-style fan-in scaling for the ReLU-facing joint layer, Xavier
            // for everything that feeds a sigmoid, tanh or softmax.
            let limit = if t.name == "W_t" || t.name == "W_cl" {
                (6.0 / t.value.cols() as f64).sqrt()
            } else {
                (6.0 / (t.value.rows() + t.value.cols()) as f64).sqrt()
            };
            for v in t.value.data_mut() {
                *v = rng.gen_range(-limit..limit);
            }
        }
    });
    Ok(params)
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_f1: f64,
    /// Absent when the validation split holds a single class.
    pub val_auc: Option<f64>,
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub params: ModelParams,
    /// Parameters from the epoch with the best validation macro F1
    /// (earliest epoch wins ties). Equal to the initial parameters when no
    /// epoch ran.
    pub best_params: ModelParams,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

/// Seeded per-class 90/10 split over indices into `examples`. Each class
/// with at least two members contributes at least one validation example, so
/// any corpus with two examples per class validates on both classes. Index
/// lists come back sorted.
pub fn stratified_split(
    examples: &[PreparedExample],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, e) in examples.iter().enumerate() {
        by_class[e.label as usize].push(i);
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in &mut by_class {
        class.shuffle(rng);
        let n_val = if class.len() >= 2 {
            (class.len() / 10).max(1)
        } else {
            0
        };
        val.extend_from_slice(&class[..n_val]);
        train.extend_from_slice(&class[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn weights_for(labels: [usize; 2]) -> Result<[f64; 2]> {
    let total = (labels[0] + labels[1]) as f64;
    for (c, &n) in labels.iter().enumerate() {
        if n == 0 {
            return Err(MusemError::Empty(format!(
                "training split has no examples with label {c}"
            )));
        }
    }
    Ok([
        total / (2.0 * labels[0] as f64),
        total / (2.0 * labels[1] as f64),
    ])
}

/// Incremental training driver. One instance owns the embedding table, the
/// prepared examples, the parameters and all RNG state; every epoch is a
/// plain method call so callers can interleave their own reporting.
pub struct Trainer {
    config: TrainConfig,
    table: EmbeddingTable,
    prepared: Vec<PreparedExample>,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
    class_weights: [f64; 2],
    params: ModelParams,
    adam: Adam,
    rng: ChaCha8Rng,
    epoch: usize,
    log: Vec<EpochLog>,
    best: (f64, usize, ModelParams),
}

impl Trainer {
    pub fn new(
        examples: &[ExamplePair],
        provider: &SyntheticHeadlineSource,
        table: EmbeddingTable,
        config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        if examples.is_empty() {
            return Err(MusemError::Empty("training dataset".into()));
        }
        if table.dim() != config.d {
            return Err(MusemError::Shape {
                context: "embedding table vs config".into(),
                expected: format!("d = {}", config.d),
                got: format!("{}", table.dim()),
            });
        }
        let prepared: Vec<PreparedExample> = examples
            .iter()
            .map(|e| prepare_example(e, provider, &table, config.max_len))
            .collect::<Result<_>>()?;

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = init_params(&config, &mut rng)?;
        let (train_idx, mut val_idx) = stratified_split(&prepared, &mut rng);
        if val_idx.is_empty() {
            // Degenerate corpus (fewer than two examples in every class):
            // validate on the training examples rather than nothing.
            val_idx.clone_from(&train_idx);
        }
        let mut counts = [0usize; 2];
        for &i in &train_idx {
            counts[prepared[i].label as usize] += 1;
        }
        let class_weights = weights_for(counts)?;
        let adam = Adam::new(config.adam())?;
        let best = (f64::NEG_INFINITY, 0, params.clone());
        Ok(Trainer {
            config,
            table,
            prepared,
            train_idx,
            val_idx,
            class_weights,
            params,
            adam,
            rng,
            epoch: 0,
            log: Vec::new(),
            best,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn epochs_run(&self) -> usize {
        self.epoch
    }

    pub fn split_sizes(&self) -> (usize, usize) {
        (self.train_idx.len(), self.val_idx.len())
    }

    /// Runs one epoch: shuffled mini-batches, one Adam step per batch on the
    /// mean weighted loss, then validation metrics. Returns the log line it
    /// appended.
    pub fn run_epoch(&mut self) -> Result<EpochLog> {
        self.epoch += 1;
        let mut order = self.train_idx.clone();
        order.shuffle(&mut self.rng);

        let mut loss_sum = 0.0;
        for (batch_no, batch) in order.chunks(self.config.batch_size).enumerate() {
            self.params.zero_grads();
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let ex = &self.prepared[i];
                let enc = embed_prepared(ex, &self.table)?;
                let mask = if self.config.dropout > 0.0 {
                    Some(dropout_mask(
                        self.config.hidden,
                        self.config.dropout,
                        &mut self.rng,
                    )?)
                } else {
                    None
                };
                let loss = example_loss_and_grad(
                    &mut self.params,
                    &enc,
                    ex.label,
                    self.class_weights,
                    mask.as_deref(),
                    scale,
                )?;
                batch_loss += loss;
            }
            if !batch_loss.is_finite() {
                return Err(MusemError::NonFiniteLoss {
                    epoch: self.epoch,
                    batch: batch_no + 1,
                });
            }
            loss_sum += batch_loss;
            self.adam.step(&mut self.params);
        }

        let (val_macro_f1, val_auc) = self.validation_metrics()?;
        let line = EpochLog {
            epoch: self.epoch,
            train_loss: loss_sum / self.train_idx.len() as f64,
            val_macro_f1,
            val_auc,
        };
        // Strictly-better keeps the earliest epoch on ties.
        if val_macro_f1 > self.best.0 {
            self.best = (val_macro_f1, self.epoch, self.params.clone());
        }
        self.log.push(line.clone());
        Ok(line)
    }

    fn validation_metrics(&self) -> Result<(f64, Option<f64>)> {
        let mut labels = Vec::with_capacity(self.val_idx.len());
        let mut preds = Vec::with_capacity(self.val_idx.len());
        let mut scores = Vec::with_capacity(self.val_idx.len());
        for &i in &self.val_idx {
            let ex = &self.prepared[i];
            let enc = embed_prepared(ex, &self.table)?;
            let p = predict(&self.params, &enc)?;
            labels.push(ex.label);
            preds.push(p.label);
            scores.push(p.p_incongruent);
        }
        let scores_f1 = class_scores(&confusion_counts(&labels, &preds)?);
        let macro_f1 = (scores_f1[0].f1 + scores_f1[1].f1) / 2.0;
        let auc = match auc(&labels, &scores) {
            Ok(v) => Some(v),
            Err(MusemError::MetricUndefined(_)) => None,
            Err(e) => return Err(e),
        };
        Ok((macro_f1, auc))
    }

    pub fn finish(self) -> TrainOutcome {
        TrainOutcome {
            params: self.params,
            best_params: self.best.2,
            best_epoch: self.best.1,
            log: self.log,
        }
    }
}

/// Runs `config.epochs` epochs end to end.
pub fn train(
    examples: &[ExamplePair],
    provider: &SyntheticHeadlineSource,
    table: EmbeddingTable,
    config: TrainConfig,
) -> Result<TrainOutcome> {
    let epochs = config.epochs;
    let mut trainer = Trainer::new(examples, provider, table, config)?;
    for _ in 0..epochs {
        trainer.run_epoch()?;
    }
    Ok(trainer.finish())
}
