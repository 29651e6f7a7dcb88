//! Adam with bias correction. State is keyed on the parameter set's fixed
//! traversal order, so the same optimizer instance must always be stepped
//! with the same set.

use crate::error::{MusemError, Result};
use crate::tensor::{ParamSet, ParamTensor};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(MusemError::Config(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(MusemError::Config(format!(
                    "{name} must be in [0, 1), got {v}"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(MusemError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// First and second moment estimates for one tensor.
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

pub struct Adam {
    config: AdamConfig,
    step_count: u64,
    moments: Vec<Moments>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Adam {
            config,
            step_count: 0,
            moments: Vec::new(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update from the gradients currently stored in `params`.
    /// Gradients are left untouched; the caller zeroes them per batch.
    pub fn step(&mut self, params: &mut impl ParamSet) {
        self.step_count += 1;
        let t = self.step_count as f64;
        let c = self.config;
        // Fold both bias corrections into the step size.
        let lr_t = c.learning_rate * (1.0 - c.beta2.powf(t)).sqrt() / (1.0 - c.beta1.powf(t));

        let moments = &mut self.moments;
        let mut index = 0;
        params.for_each_mut(&mut |tensor: &mut ParamTensor| {
            let len = tensor.value.data().len();
            if moments.len() == index {
                moments.push(Moments {
                    m: vec![0.0; len],
                    v: vec![0.0; len],
                });
            }
            let state = &mut moments[index];
            assert_eq!(state.m.len(), len, "optimizer state reused across shapes");
            let grads = tensor.grad.data();
            let values = tensor.value.data_mut();
            for k in 0..len {
                let g = grads[k];
                state.m[k] = c.beta1 * state.m[k] + (1.0 - c.beta1) * g;
                state.v[k] = c.beta2 * state.v[k] + (1.0 - c.beta2) * g * g;
                values[k] -= lr_t * state.m[k] / (state.v[k].sqrt() + c.epsilon);
            }
            index += 1;
        });
    }
}
