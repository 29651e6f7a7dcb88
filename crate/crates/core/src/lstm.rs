//! LSTM encoder over the two word sequences.
//!
//! The encoder consumes the unmasked original-headline embeddings in order,
//! then the unmasked synthetic-headline embeddings (or the reverse when
//! `synthetic_first` is set), and returns the final hidden state. Padding
//! positions are skipped entirely rather than fed as zeros, so the encoding
//! is exactly independent of how much padding the sequences carry.
//!
//! Gates follow the standard formulation on the concatenated input
//! `z = [h_prev | x]`, hidden state first: forget, input, candidate, output.

use crate::error::{MusemError, Result};
use crate::tensor::{sigmoid, Mat, ParamTensor};

#[derive(Debug, Clone)]
pub struct LstmParams {
    pub w_f: ParamTensor,
    pub w_i: ParamTensor,
    pub w_c: ParamTensor,
    pub w_o: ParamTensor,
    pub b_f: ParamTensor,
    pub b_i: ParamTensor,
    pub b_c: ParamTensor,
    pub b_o: ParamTensor,
}

impl LstmParams {
    /// All-zero parameters for `hidden` units over `input_dim` inputs. Each
    /// weight matrix is `hidden x (hidden + input_dim)`.
    pub fn zeros(hidden: usize, input_dim: usize) -> Self {
        let cols = hidden + input_dim;
        LstmParams {
            w_f: ParamTensor::zeros("W_f", hidden, cols),
            w_i: ParamTensor::zeros("W_i", hidden, cols),
            w_c: ParamTensor::zeros("W_C", hidden, cols),
            w_o: ParamTensor::zeros("W_o", hidden, cols),
            b_f: ParamTensor::zeros("b_f", hidden, 1),
            b_i: ParamTensor::zeros("b_i", hidden, 1),
            b_c: ParamTensor::zeros("b_C", hidden, 1),
            b_o: ParamTensor::zeros("b_o", hidden, 1),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_f.value.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_f.value.cols() - self.hidden()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Per-step values the backward pass replays.
#[derive(Debug, Clone)]
struct StepCache {
    z: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct LstmCache {
    steps: Vec<StepCache>,
}

fn gate(w: &ParamTensor, b: &ParamTensor, z: &[f64]) -> Vec<f64> {
    let mut a = w.value.matvec(z);
    for (v, bias) in a.iter_mut().zip(b.value.data()) {
        *v += bias;
    }
    a
}

fn step_cached(params: &LstmParams, state: &LstmState, x: &[f64]) -> (LstmState, StepCache) {
    let hidden = params.hidden();
    let mut z = Vec::with_capacity(hidden + x.len());
    z.extend_from_slice(&state.h);
    z.extend_from_slice(x);

    let f: Vec<f64> = gate(&params.w_f, &params.b_f, &z)
        .into_iter()
        .map(sigmoid)
        .collect();
    let i: Vec<f64> = gate(&params.w_i, &params.b_i, &z)
        .into_iter()
        .map(sigmoid)
        .collect();
    let g: Vec<f64> = gate(&params.w_c, &params.b_c, &z)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let o: Vec<f64> = gate(&params.w_o, &params.b_o, &z)
        .into_iter()
        .map(sigmoid)
        .collect();

    let mut c = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    for k in 0..hidden {
        c[k] = f[k] * state.c[k] + i[k] * g[k];
        tanh_c[k] = c[k].tanh();
        h[k] = o[k] * tanh_c[k];
    }

    let cache = StepCache {
        z,
        f,
        i,
        g,
        o,
        c_prev: state.c.clone(),
        tanh_c,
    };
    (LstmState { h, c }, cache)
}

/// One LSTM step. `x` must have length `input_dim`.
pub fn lstm_step(params: &LstmParams, state: &LstmState, x: &[f64]) -> Result<LstmState> {
    if x.len() != params.input_dim() {
        return Err(MusemError::Shape {
            context: "lstm_step input".into(),
            expected: format!("{}", params.input_dim()),
            got: format!("{}", x.len()),
        });
    }
    if state.h.len() != params.hidden() || state.c.len() != params.hidden() {
        return Err(MusemError::Shape {
            context: "lstm_step state".into(),
            expected: format!("{}", params.hidden()),
            got: format!("{} and {}", state.h.len(), state.c.len()),
        });
    }
    Ok(step_cached(params, state, x).0)
}

/// Runs the encoder over both sequences and returns the final hidden state
/// together with the cache `encode_backward` consumes.
pub fn encode(
    params: &LstmParams,
    h_o: &Mat,
    mask_o: &[bool],
    h_s: &Mat,
    mask_s: &[bool],
    synthetic_first: bool,
) -> Result<(Vec<f64>, LstmCache)> {
    if h_o.cols() != params.input_dim() || h_s.cols() != params.input_dim() {
        return Err(MusemError::Shape {
            context: "encode embeddings".into(),
            expected: format!("dimension {}", params.input_dim()),
            got: format!("{} and {}", h_o.cols(), h_s.cols()),
        });
    }
    let mut state = LstmState::zeros(params.hidden());
    let mut cache = LstmCache::default();
    let sides: [(&Mat, &[bool]); 2] = if synthetic_first {
        [(h_s, mask_s), (h_o, mask_o)]
    } else {
        [(h_o, mask_o), (h_s, mask_s)]
    };
    for (h, mask) in sides {
        for t in 0..h.rows() {
            if !mask[t] {
                continue;
            }
            let (next, step) = step_cached(params, &state, h.row(t));
            cache.steps.push(step);
            state = next;
        }
    }
    if cache.steps.is_empty() {
        return Err(MusemError::Empty("encode: no unmasked tokens".into()));
    }
    Ok((state.h, cache))
}

/// Backpropagation through time. Accumulates gradients for all eight tensors;
/// input gradients are not computed because the embeddings are frozen.
pub fn encode_backward(params: &mut LstmParams, cache: &LstmCache, d_m_e: &[f64]) {
    let hidden = params.hidden();
    let mut dh = d_m_e.to_vec();
    let mut dc = vec![0.0; hidden];
    for step in cache.steps.iter().rev() {
        let mut da_f = vec![0.0; hidden];
        let mut da_i = vec![0.0; hidden];
        let mut da_g = vec![0.0; hidden];
        let mut da_o = vec![0.0; hidden];
        let mut dc_prev = vec![0.0; hidden];
        for k in 0..hidden {
            let do_k = dh[k] * step.tanh_c[k];
            let dct = dc[k] + dh[k] * step.o[k] * (1.0 - step.tanh_c[k] * step.tanh_c[k]);
            let df = dct * step.c_prev[k];
            let di = dct * step.g[k];
            let dg = dct * step.i[k];
            dc_prev[k] = dct * step.f[k];
            da_f[k] = df * step.f[k] * (1.0 - step.f[k]);
            da_i[k] = di * step.i[k] * (1.0 - step.i[k]);
            da_g[k] = dg * (1.0 - step.g[k] * step.g[k]);
            da_o[k] = do_k * step.o[k] * (1.0 - step.o[k]);
        }

        params.w_f.grad.add_outer(&da_f, &step.z);
        params.w_i.grad.add_outer(&da_i, &step.z);
        params.w_c.grad.add_outer(&da_g, &step.z);
        params.w_o.grad.add_outer(&da_o, &step.z);
        for k in 0..hidden {
            params.b_f.grad.add_at(k, 0, da_f[k]);
            params.b_i.grad.add_at(k, 0, da_i[k]);
            params.b_c.grad.add_at(k, 0, da_g[k]);
            params.b_o.grad.add_at(k, 0, da_o[k]);
        }

        let mut dz = params.w_f.value.matvec_t(&da_f);
        let dz_i = params.w_i.value.matvec_t(&da_i);
        let dz_g = params.w_c.value.matvec_t(&da_g);
        let dz_o = params.w_o.value.matvec_t(&da_o);
        for k in 0..dz.len() {
            dz[k] += dz_i[k] + dz_g[k] + dz_o[k];
        }
        dh.copy_from_slice(&dz[..hidden]);
        dc = dc_prev;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::grad_check;
    use crate::tensor::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng, hidden: usize, input_dim: usize) -> LstmParams {
        let mut p = LstmParams::zeros(hidden, input_dim);
        for t in [&mut p.w_f, &mut p.w_i, &mut p.w_c, &mut p.w_o] {
            for v in t.value.data_mut() {
                *v = rng.gen_range(-0.7..0.7);
            }
        }
        for t in [&mut p.b_f, &mut p.b_i, &mut p.b_c, &mut p.b_o] {
            for v in t.value.data_mut() {
                *v = rng.gen_range(-0.3..0.3);
            }
        }
        p
    }

    fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Mat::from_vec(rows, cols, data).unwrap()
    }

    fn params_vec(p: LstmParams) -> Vec<ParamTensor> {
        vec![p.w_f, p.w_i, p.w_c, p.w_o, p.b_f, p.b_i, p.b_c, p.b_o]
    }

    fn params_from_vec(v: &[ParamTensor]) -> LstmParams {
        LstmParams {
            w_f: v[0].clone(),
            w_i: v[1].clone(),
            w_c: v[2].clone(),
            w_o: v[3].clone(),
            b_f: v[4].clone(),
            b_i: v[5].clone(),
            b_c: v[6].clone(),
            b_o: v[7].clone(),
        }
    }

    #[test]
    fn zero_params_and_input_give_zero_state() {
        let p = LstmParams::zeros(3, 2);
        let s = lstm_step(&p, &LstmState::zeros(3), &[0.0, 0.0]).unwrap();
        assert_eq!(s.h, vec![0.0; 3]);
        assert_eq!(s.c, vec![0.0; 3]);
    }

    #[test]
    fn hidden_state_stays_strictly_inside_unit_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_params(&mut rng, 4, 3);
        let mut state = LstmState::zeros(4);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
            state = lstm_step(&p, &state, &x).unwrap();
            for v in &state.h {
                assert!(v.abs() < 1.0, "h out of bounds: {v}");
            }
        }
    }

    #[test]
    fn step_rejects_wrong_input_length() {
        let p = LstmParams::zeros(3, 2);
        assert!(lstm_step(&p, &LstmState::zeros(3), &[1.0]).is_err());
    }

    // Single cell, hand-set weights, reference values computed independently
    // at 60 decimal digits. Catches any deviation from the standard gate
    // equations (wrong activation, wrong gate wiring, wrong z layout).
    #[test]
    fn single_cell_step_matches_high_precision_reference() {
        let w = |a, b| ParamTensor::new("w", Mat::from_vec(1, 2, vec![a, b]).unwrap());
        let b = |v| ParamTensor::new("b", Mat::from_vec(1, 1, vec![v]).unwrap());
        let p = LstmParams {
            w_f: w(0.5, -0.25),
            w_i: w(-0.3, 0.8),
            w_c: w(0.7, 0.6),
            w_o: w(0.2, -0.4),
            b_f: b(0.1),
            b_i: b(-0.2),
            b_c: b(0.05),
            b_o: b(0.3),
        };
        let state = LstmState {
            h: vec![0.2],
            c: vec![-0.1],
        };
        let next = lstm_step(&p, &state, &[0.8]).unwrap();
        assert!((next.h[0] - 0.14591210545812873935).abs() < 1e-15);
        assert!((next.c[0] - 0.29740381820042978697).abs() < 1e-15);
    }

    #[test]
    fn encode_equals_manually_chained_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = random_params(&mut rng, 3, 2);
        let h_o = random_mat(&mut rng, 2, 2);
        let h_s = random_mat(&mut rng, 1, 2);

        let (m_e, _) = encode(&p, &h_o, &[true, true], &h_s, &[true], false).unwrap();

        let mut state = LstmState::zeros(3);
        for x in [h_o.row(0), h_o.row(1), h_s.row(0)] {
            state = lstm_step(&p, &state, x).unwrap();
        }
        assert_eq!(m_e, state.h);
    }

    #[test]
    fn encoding_is_independent_of_padding_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_params(&mut rng, 3, 2);
        let tokens_o = random_mat(&mut rng, 2, 2);
        let tokens_s = random_mat(&mut rng, 1, 2);

        // Same real tokens embedded into two different padded lengths.
        let mut short_o = Mat::zeros(3, 2);
        let mut long_o = Mat::zeros(7, 2);
        for t in 0..2 {
            short_o.row_mut(t).copy_from_slice(tokens_o.row(t));
            long_o.row_mut(t).copy_from_slice(tokens_o.row(t));
        }
        let mut short_s = Mat::zeros(2, 2);
        let mut long_s = Mat::zeros(5, 2);
        short_s.row_mut(0).copy_from_slice(tokens_s.row(0));
        long_s.row_mut(0).copy_from_slice(tokens_s.row(0));

        let (m_short, _) = encode(
            &p,
            &short_o,
            &[true, true, false],
            &short_s,
            &[true, false],
            false,
        )
        .unwrap();
        let (m_long, _) = encode(
            &p,
            &long_o,
            &[true, true, false, false, false, false, false],
            &long_s,
            &[true, false, false, false, false],
            false,
        )
        .unwrap();
        assert_eq!(m_short, m_long, "padding must not change the encoding");
    }

    #[test]
    fn order_flag_swaps_the_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = random_params(&mut rng, 3, 2);
        let h_o = random_mat(&mut rng, 2, 2);
        let h_s = random_mat(&mut rng, 2, 2);
        let mask = [true, true];
        let (a, _) = encode(&p, &h_o, &mask, &h_s, &mask, false).unwrap();
        let (b, _) = encode(&p, &h_o, &mask, &h_s, &mask, true).unwrap();
        assert_ne!(a, b);
        // Swapping the flag equals swapping the inputs.
        let (c, _) = encode(&p, &h_s, &mask, &h_o, &mask, false).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn encode_requires_at_least_one_real_token() {
        let p = LstmParams::zeros(2, 2);
        let h = Mat::zeros(2, 2);
        let err = encode(&p, &h, &[false, false], &h, &[false, false], false).unwrap_err();
        assert!(err.to_string().contains("no unmasked tokens"));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let hidden = 3;
        let d = 2;
        let h_o = random_mat(&mut rng, 3, d);
        let h_s = random_mat(&mut rng, 2, d);
        let mask_o = [true, true, false];
        let mask_s = [true, true];
        let upstream: Vec<f64> = (0..hidden).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let mut params = params_vec(random_params(&mut rng, hidden, d));
        let report = grad_check(
            &mut params,
            |p| {
                let mut lstm = params_from_vec(p);
                let (m_e, cache) = encode(&lstm, &h_o, &mask_o, &h_s, &mask_s, false)?;
                let loss = dot(&m_e, &upstream);
                encode_backward(&mut lstm, &cache, &upstream);
                let back = params_vec(lstm);
                for (dst, src) in p.iter_mut().zip(back) {
                    dst.grad = src.grad;
                }
                Ok(loss)
            },
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.passed(), "\n{}", report.render_table());
        let names = report
            .params
            .iter()
            .map(|p| p.name.clone())
            .collect::<Vec<_>>();
        assert_eq!(
            names,
            vec!["W_f", "W_i", "W_C", "W_o", "b_f", "b_i", "b_C", "b_o"]
        );
    }
}
