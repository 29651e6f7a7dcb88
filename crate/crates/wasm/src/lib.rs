//! Browser bindings for the matcher demo. One `Demo` instance bundles a
//! generated two-topic corpus, its embedding table and an epoch-stepped
//! trainer; every method speaks JSON strings so the page needs no
//! generated types beyond these four entry points. The fallible logic
//! lives in `*_inner` methods returning plain strings, because `JsError`
//! can only be constructed on a wasm target.

use musem_core::attention::{AttentionVariant, Pooling};
use musem_core::corpus::{demo_embedding_table, two_topic_corpus};
use musem_core::dataset::ExamplePair;
use musem_core::model::{embed_prepared, model_forward, prepare_example};
use musem_core::provider::SyntheticHeadlineSource;
use musem_core::train::{TrainConfig, Trainer};
use serde_json::json;
use wasm_bindgen::prelude::*;

const CORPUS_SIZE: usize = 64;
const EMBED_DIM: usize = 8;
const HIDDEN: usize = 8;

fn parse_flag<T: serde::de::DeserializeOwned>(kind: &str, raw: &str) -> Result<T, String> {
    serde_json::from_value(json!(raw)).map_err(|_| format!("unknown {kind} {raw:?}"))
}

/// A self-contained training playground: generated corpus, lead-sentence
/// synthetic headlines, and a model trainable one batch of epochs at a time.
#[wasm_bindgen]
pub struct Demo {
    corpus: Vec<ExamplePair>,
    provider: SyntheticHeadlineSource,
    trainer: Trainer,
}

#[wasm_bindgen]
impl Demo {
    /// Builds the corpus and a freshly initialized model. `variant` is one
    /// of diff, dot, concat, clubbed; `pooling` is avg or max.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, variant: &str, pooling: &str) -> Result<Demo, JsError> {
        Demo::new_inner(seed, variant, pooling).map_err(|e| JsError::new(&e))
    }

    /// The bundled examples as JSON, for the corpus browser.
    #[wasm_bindgen(js_name = corpusPreview)]
    pub fn corpus_preview(&self) -> String {
        let rows: Vec<_> = self
            .corpus
            .iter()
            .map(|e| {
                json!({
                    "id": e.id,
                    "headline": e.headline,
                    "body": e.body,
                    "label": e.label,
                })
            })
            .collect();
        json!(rows).to_string()
    }

    /// Runs `n` more epochs and returns their log lines plus run totals.
    #[wasm_bindgen(js_name = trainEpochs)]
    pub fn train_epochs(&mut self, n: usize) -> Result<String, JsError> {
        self.train_epochs_inner(n).map_err(|e| JsError::new(&e))
    }

    /// Scores one headline/body pair with the current parameters and
    /// returns the full attention picture: both token lists, the score
    /// matrix, the two weight vectors and the class probabilities. An empty
    /// `synthetic` falls back to the body's lead sentence.
    pub fn analyze(&self, headline: &str, body: &str, synthetic: &str) -> Result<String, JsError> {
        self.analyze_inner(headline, body, synthetic)
            .map_err(|e| JsError::new(&e))
    }
}

impl Demo {
    fn new_inner(seed: u32, variant: &str, pooling: &str) -> Result<Demo, String> {
        let variant: AttentionVariant = parse_flag("variant", variant)?;
        let pooling: Pooling = parse_flag("pooling", pooling)?;
        let config = TrainConfig {
            d: EMBED_DIM,
            hidden: HIDDEN,
            seed: u64::from(seed),
            variant,
            pooling,
            ..TrainConfig::default()
        };
        let corpus = two_topic_corpus(CORPUS_SIZE, config.seed);
        let table = demo_embedding_table(EMBED_DIM, config.seed);
        let provider = SyntheticHeadlineSource::lead_k(1).map_err(|e| e.to_string())?;
        let trainer = Trainer::new(&corpus, &provider, table, config).map_err(|e| e.to_string())?;
        Ok(Demo {
            corpus,
            provider,
            trainer,
        })
    }

    fn train_epochs_inner(&mut self, n: usize) -> Result<String, String> {
        let mut lines = Vec::with_capacity(n);
        for _ in 0..n {
            lines.push(self.trainer.run_epoch().map_err(|e| e.to_string())?);
        }
        let (train_size, val_size) = self.trainer.split_sizes();
        Ok(json!({
            "epochs": lines,
            "epochs_run": self.trainer.epochs_run(),
            "train_size": train_size,
            "val_size": val_size,
        })
        .to_string())
    }

    fn analyze_inner(&self, headline: &str, body: &str, synthetic: &str) -> Result<String, String> {
        let example = ExamplePair {
            id: "interactive".into(),
            headline: headline.into(),
            body: body.into(),
            label: 0,
            synthetic_headline: (!synthetic.trim().is_empty()).then(|| synthetic.to_string()),
        };
        let config = self.trainer.config();
        let table = self.trainer.table();
        let prep = prepare_example(&example, &self.provider, table, config.max_len)
            .map_err(|e| e.to_string())?;
        let enc = embed_prepared(&prep, table).map_err(|e| e.to_string())?;
        let fwd = model_forward(self.trainer.params(), &enc, None).map_err(|e| e.to_string())?;

        let len_o = prep.seq_o.real_len();
        let len_s = prep.seq_s.real_len();
        let c: Vec<&[f64]> = (0..len_o)
            .map(|q| &fwd.attention.c.row(q)[..len_s])
            .collect();
        let [p_congruent, p_incongruent] = fwd.output.probs;
        Ok(json!({
            "tokens_o": prep.seq_o.real_tokens(),
            "tokens_s": prep.seq_s.real_tokens(),
            "c": c,
            "a_o": &fwd.attention.a_o[..len_o],
            "a_s": &fwd.attention.a_s[..len_s],
            "p_congruent": p_congruent,
            "p_incongruent": p_incongruent,
            "label": u8::from(p_incongruent > 0.5),
            "epochs_run": self.trainer.epochs_run(),
        })
        .to_string())
    }
}
