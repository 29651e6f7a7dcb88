//! Minimal dense numerics: row-major matrices, slice helpers, activations,
//! masked softmax and inverted dropout. Everything is f64; nothing here
//! allocates threads or depends on BLAS.

use crate::error::{MusemError, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Dense row-major matrix. Invariant: `data.len() == rows * cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MusemError::Shape {
                context: "Mat::from_vec".into(),
                expected: format!("{} values for {rows}x{cols}", rows * cols),
                got: format!("{}", data.len()),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// `self * x` for a column vector `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `self^T * x` for a column vector `x` of length `rows`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            let xr = x[r];
            for c in 0..self.cols {
                out[c] += row[c] * xr;
            }
        }
        out
    }

    /// Rank-one update `self += u * v^T`. Used to accumulate weight gradients.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for r in 0..self.rows {
            let ur = u[r];
            let row = self.row_mut(r);
            for c in 0..v.len() {
                row[c] += ur * v[c];
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add_assign(a: &mut [f64], b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

pub fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

/// Numerically stable logistic sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Softmax over the unmasked entries of `scores`; masked entries come out
/// exactly 0. The max-shift keeps exponentials bounded, so the result is
/// invariant to adding a constant to all unmasked scores.
pub fn masked_softmax(scores: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    if scores.len() != mask.len() {
        return Err(MusemError::Shape {
            context: "masked_softmax".into(),
            expected: format!("mask of length {}", scores.len()),
            got: format!("{}", mask.len()),
        });
    }
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(MusemError::EmptySoftmax);
    }
    let mut out = vec![0.0; scores.len()];
    let mut sum = 0.0;
    for i in 0..scores.len() {
        if mask[i] {
            let e = (scores[i] - max).exp();
            out[i] = e;
            sum += e;
        }
    }
    for v in out.iter_mut() {
        *v /= sum;
    }
    Ok(out)
}

/// Gradient of `masked_softmax`: given the probabilities `p` and upstream
/// `d_p`, returns d(scores). Masked positions stay 0.
pub fn masked_softmax_backward(p: &[f64], d_p: &[f64], mask: &[bool]) -> Vec<f64> {
    let inner: f64 = p
        .iter()
        .zip(d_p)
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|((pi, di), _)| pi * di)
        .sum();
    p.iter()
        .zip(d_p)
        .zip(mask)
        .map(|((pi, di), m)| if *m { pi * (di - inner) } else { 0.0 })
        .collect()
}

/// Inverted-dropout multipliers: each entry is 0 with probability `rate`,
/// otherwise `1/(1-rate)`, so the expected value of a masked activation is
/// unchanged. Inference simply skips the mask.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(MusemError::Config(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    let keep = 1.0 / (1.0 - rate);
    Ok((0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect())
}

/// Applies dropout in place during training; identity when `training` is false.
pub fn dropout(v: &mut [f64], rate: f64, rng: &mut impl Rng, training: bool) -> Result<()> {
    if !training {
        return Ok(());
    }
    let mask = dropout_mask(v.len(), rate, rng)?;
    for (x, m) in v.iter_mut().zip(&mask) {
        *x *= m;
    }
    Ok(())
}

/// A named trainable tensor with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct ParamTensor {
    pub name: String,
    pub value: Mat,
    pub grad: Mat,
}

impl ParamTensor {
    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        ParamTensor {
            name: name.into(),
            value: Mat::zeros(rows, cols),
            grad: Mat::zeros(rows, cols),
        }
    }

    /// Wraps an existing value with a zeroed gradient of the same shape.
    pub fn new(name: impl Into<String>, value: Mat) -> Self {
        let grad = Mat::zeros(value.rows(), value.cols());
        ParamTensor {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Fixed-order traversal over a collection of trainable tensors. The order
/// must be stable across calls: the optimizer and the checkpoint format both
/// key their state on it.
pub trait ParamSet {
    fn for_each(&self, f: &mut dyn FnMut(&ParamTensor));
    fn for_each_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor));

    fn zero_grads(&mut self) {
        self.for_each_mut(&mut |t| t.zero_grad());
    }

    fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.for_each(&mut |t| names.push(t.name.clone()));
        names
    }

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.for_each(&mut |t| n += t.value.data().len());
        n
    }
}

impl ParamSet for Vec<ParamTensor> {
    fn for_each(&self, f: &mut dyn FnMut(&ParamTensor)) {
        for t in self {
            f(t);
        }
    }

    fn for_each_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        for t in self {
            f(t);
        }
    }
}
