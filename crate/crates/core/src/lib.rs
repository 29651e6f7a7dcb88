//! Semantic matching between a news headline and its body text.
//!
//! The model scores every (headline word, synthetic headline word) pair with a
//! small trainable attention head, pools the scores into mutual attention
//! weights, combines the attended representations with an LSTM encoding of the
//! two word sequences, and classifies the pair as congruent or incongruent.
//! Word embeddings are loaded from a pretrained table and stay frozen; all
//! other parameters train with Adam on a class-weighted cross-entropy loss.
//!
//! Everything is plain f64 on a single thread, with hand-written backward
//! passes checked against finite differences (see [`gradcheck`]).

pub mod attention;
pub mod checkpoint;
pub mod classifier;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod gradcheck;
pub mod lstm;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod provider;
pub mod tensor;
pub mod text;
pub mod train;

pub use error::{MusemError, Result};
pub use tensor::{Mat, ParamSet, ParamTensor};
