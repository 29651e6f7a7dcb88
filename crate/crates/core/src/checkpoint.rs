//! Checkpoints: one JSON document holding the config, the epoch, and every
//! trainable tensor by name and shape. Floats print with round-trip
//! precision, so save/load is bit-exact and repeated saves of the same state
//! are byte-identical.

use crate::error::{MusemError, Result};
use crate::model::ModelParams;
use crate::tensor::{Mat, ParamSet};
use crate::train::TrainConfig;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format_version: u32,
    config: TrainConfig,
    epoch: usize,
    tensors: Vec<TensorRecord>,
}

/// A loaded checkpoint: the recorded config plus parameters rebuilt from it.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub epoch: usize,
    pub params: ModelParams,
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    params: &ModelParams,
    config: &TrainConfig,
    epoch: usize,
) -> Result<()> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut tensors = Vec::new();
    let mut bad: Option<String> = None;
    params.for_each(&mut |t| {
        if !t.value.is_finite() && bad.is_none() {
            bad = Some(t.name.clone());
        }
        tensors.push(TensorRecord {
            name: t.name.clone(),
            rows: t.value.rows(),
            cols: t.value.cols(),
            values: t.value.data().to_vec(),
        });
    });
    if let Some(name) = bad {
        return Err(MusemError::NonFinite {
            context: format!("checkpoint tensor '{name}'"),
        });
    }
    let file = CheckpointFile {
        format_version: FORMAT_VERSION,
        config: config.clone(),
        epoch,
        tensors,
    };
    let mut text = serde_json::to_string(&file)
        .map_err(|e| MusemError::Config(format!("serialize checkpoint: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| MusemError::io(shown, e))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| MusemError::io(shown.clone(), e))?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .map_err(|e| MusemError::Config(format!("bad checkpoint {shown}: {e}")))?;
    if file.format_version != FORMAT_VERSION {
        return Err(MusemError::Config(format!(
            "unsupported checkpoint format_version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    file.config.validate()?;

    // Rebuild parameters for the recorded config, then fill tensors in the
    // fixed traversal order. Any divergence in name or shape means the file
    // and its header disagree.
    let mut params = ModelParams::zeros(
        file.config.variant,
        file.config.pooling,
        file.config.synthetic_first,
        file.config.d,
        file.config.hidden,
    );
    let mut records = file.tensors.into_iter();
    let mut problem: Option<MusemError> = None;
    params.for_each_mut(&mut |t| {
        if problem.is_some() {
            return;
        }
        let expected = format!("{} {}x{}", t.name, t.value.rows(), t.value.cols());
        let Some(rec) = records.next() else {
            problem = Some(MusemError::Shape {
                context: "checkpoint ended early".into(),
                expected,
                got: "no more tensors".into(),
            });
            return;
        };
        if rec.name != t.name || rec.rows != t.value.rows() || rec.cols != t.value.cols() {
            problem = Some(MusemError::Shape {
                context: format!("checkpoint tensor '{}'", rec.name),
                expected,
                got: format!("{} {}x{}", rec.name, rec.rows, rec.cols),
            });
            return;
        }
        if !rec.values.iter().all(|v| v.is_finite()) {
            problem = Some(MusemError::NonFinite {
                context: format!("checkpoint tensor '{}'", rec.name),
            });
            return;
        }
        match Mat::from_vec(rec.rows, rec.cols, rec.values) {
            Ok(m) => t.value = m,
            Err(e) => problem = Some(e),
        }
    });
    if let Some(e) = problem {
        return Err(e);
    }
    if let Some(extra) = records.next() {
        return Err(MusemError::Shape {
            context: format!("checkpoint tensor '{}'", extra.name),
            expected: "no further tensors".into(),
            got: extra.name.clone(),
        });
    }
    Ok(Checkpoint {
        config: file.config,
        epoch: file.epoch,
        params,
    })
}
