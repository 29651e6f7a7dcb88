//! Central finite-difference verification of analytic gradients.
//!
//! The checker treats the supplied closure as ground truth for loss values
//! and compares the gradients it accumulates against symmetric differences
//! `(f(p+h) - f(p-h)) / 2h` taken one scalar parameter at a time.

use crate::error::{MusemError, Result};
use crate::tensor::ParamSet;

/// Worst observed disagreement for one named tensor.
#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
}

impl ParamCheck {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub step: f64,
    pub tolerance: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.passed(self.tolerance))
    }

    pub fn max_rel_err(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.max_rel_err)
            .fold(0.0, f64::max)
    }

    /// One line per tensor, suitable for terminal output.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let width = self
            .params
            .iter()
            .map(|p| p.name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        out.push_str(&format!(
            "{:width$}  {:>12}  {:>13}  {:>13}  status\n",
            "name", "max_rel_err", "analytic", "numeric"
        ));
        for p in &self.params {
            out.push_str(&format!(
                "{:width$}  {:>12.3e}  {:>13.6e}  {:>13.6e}  {}\n",
                p.name,
                p.max_rel_err,
                p.analytic_at_worst,
                p.numeric_at_worst,
                if p.passed(self.tolerance) {
                    "ok"
                } else {
                    "FAIL"
                }
            ));
        }
        out
    }
}

/// Central differences cannot resolve slopes below roughly eps * |f| / h,
/// which is ~1e-11 for unit-scale losses at h = 1e-5. Disagreements inside
/// that noise floor are treated as exact agreement; this matters for
/// parameters whose true gradient is identically zero (for example a bias
/// that cancels inside a softmax).
const ABS_NOISE_FLOOR: f64 = 1e-8;

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    if (analytic - numeric).abs() < ABS_NOISE_FLOOR {
        return 0.0;
    }
    let denom = (analytic.abs() + numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Checks the gradients produced by `loss_and_grad` against central finite
/// differences with step `step`.
///
/// The closure must compute the scalar loss and accumulate gradients into the
/// tensors' `grad` slots; `grad_check` zeroes the slots before each call. Any
/// randomness inside the closure (dropout masks, sampling) must be frozen,
/// otherwise the perturbed evaluations measure noise instead of slope.
pub fn grad_check<P, F>(
    params: &mut P,
    mut loss_and_grad: F,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    P: ParamSet,
    F: FnMut(&mut P) -> Result<f64>,
{
    params.zero_grads();
    let base = loss_and_grad(params)?;
    if !base.is_finite() {
        return Err(MusemError::NonFinite {
            context: "grad_check base loss".into(),
        });
    }

    let mut names = Vec::new();
    let mut analytic = Vec::new();
    params.for_each(&mut |t| {
        names.push(t.name.clone());
        analytic.push(t.grad.data().to_vec());
    });

    let mut checks = Vec::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        let mut worst = ParamCheck {
            name: name.clone(),
            max_rel_err: 0.0,
            worst_index: 0,
            analytic_at_worst: analytic[k].first().copied().unwrap_or(0.0),
            numeric_at_worst: 0.0,
        };
        let mut worst_abs = -1.0;
        for i in 0..analytic[k].len() {
            let original = read_scalar(params, k, i);

            write_scalar(params, k, i, original + step);
            params.zero_grads();
            let plus = loss_and_grad(params)?;

            write_scalar(params, k, i, original - step);
            params.zero_grads();
            let minus = loss_and_grad(params)?;

            write_scalar(params, k, i, original);

            if !plus.is_finite() || !minus.is_finite() {
                return Err(MusemError::NonFinite {
                    context: format!("grad_check perturbation of {name}[{i}]"),
                });
            }

            let numeric = (plus - minus) / (2.0 * step);
            let rel = relative_error(analytic[k][i], numeric);
            let abs = (analytic[k][i] - numeric).abs();
            // Ties on relative error (common when everything sits inside the
            // noise floor) are broken by absolute disagreement so the report
            // points at the most informative entry.
            if rel > worst.max_rel_err || (rel == worst.max_rel_err && abs > worst_abs) {
                worst.max_rel_err = rel;
                worst.worst_index = i;
                worst.analytic_at_worst = analytic[k][i];
                worst.numeric_at_worst = numeric;
                worst_abs = abs;
            }
        }
        checks.push(worst);
    }

    Ok(GradCheckReport {
        step,
        tolerance,
        params: checks,
    })
}

fn read_scalar<P: ParamSet>(params: &P, tensor: usize, index: usize) -> f64 {
    let mut k = 0;
    let mut out = 0.0;
    params.for_each(&mut |t| {
        if k == tensor {
            out = t.value.data()[index];
        }
        k += 1;
    });
    out
}

fn write_scalar<P: ParamSet>(params: &mut P, tensor: usize, index: usize, v: f64) {
    let mut k = 0;
    params.for_each_mut(&mut |t| {
        if k == tensor {
            t.value.data_mut()[index] = v;
        }
        k += 1;
    });
}
