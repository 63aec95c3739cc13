//! Classical LSTM cell, sequence unrolling and backpropagation through time.
//!
//! Every gate reads the concatenation `v = [h_{t-1}, x_t]`:
//!
//! ```text
//! i  = σ(v·W_i + b_i)      f = σ(v·W_f + b_f)
//! C̃  = tanh(v·W_c + b_c)   o = σ(v·W_o + b_o)
//! C_t = i∘C̃ + f∘C_{t-1}    h_t = o∘tanh(C_t)
//! ```
//!
//! and a linear head turns the final hidden state into the scalar forecast.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ForecastError, Result};
use crate::linalg::{concat, sigmoid, Matrix};
use crate::model::{Parameterized, TensorMut, TensorRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub w_i: Matrix,
    pub w_f: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

/// Split-form gate weights: `x_t·W_x + h_{t-1}·W_h`.
#[derive(Debug, Clone)]
pub struct SplitGate {
    pub w_x: Matrix,
    pub w_h: Matrix,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
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

/// Activations of one step, retained for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    pub v: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub c_tilde: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache {
    pub steps: Vec<StepCache>,
    pub h_final: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let gate = || Matrix::zeros(hidden + input, hidden);
        LstmParams {
            w_i: gate(),
            w_f: gate(),
            w_c: gate(),
            w_o: gate(),
            b_i: vec![0.0; hidden],
            b_f: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
            head_w: vec![0.0; hidden],
            head_b: 0.0,
        }
    }

    /// Uniform `[-k, k]` weights with `k = 1/sqrt(hidden + input)`, forget
    /// bias +1, head weights uniform in `[-1/sqrt(hidden), 1/sqrt(hidden)]`.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let k = 1.0 / ((hidden + input) as f64).sqrt();
        let gate =
            |rng: &mut R| Matrix::from_fn(hidden + input, hidden, |_, _| rng.gen_range(-k..=k));
        let w_i = gate(rng);
        let w_f = gate(rng);
        let w_c = gate(rng);
        let w_o = gate(rng);
        let bias = |rng: &mut R| {
            (0..hidden)
                .map(|_| rng.gen_range(-k..=k))
                .collect::<Vec<_>>()
        };
        let b_i = bias(rng);
        let b_f = bias(rng).into_iter().map(|b| b + 1.0).collect();
        let b_c = bias(rng);
        let b_o = bias(rng);
        let kh = 1.0 / (hidden as f64).sqrt();
        let head_w = (0..hidden).map(|_| rng.gen_range(-kh..=kh)).collect();
        LstmParams {
            w_i,
            w_f,
            w_c,
            w_o,
            b_i,
            b_f,
            b_c,
            b_o,
            head_w,
            head_b: 0.0,
        }
    }

    /// Assembles the concatenated form from split `(W_x, W_h, b)` gates in
    /// the order input, forget, candidate, output.
    pub fn from_split(gates: [SplitGate; 4], head_w: Vec<f64>, head_b: f64) -> Result<Self> {
        let [gi, gf, gc, go] = gates;
        let join = |g: &SplitGate| Matrix::vstack(&g.w_h, &g.w_x);
        Ok(LstmParams {
            w_i: join(&gi)?,
            w_f: join(&gf)?,
            w_c: join(&gc)?,
            w_o: join(&go)?,
            b_i: gi.b,
            b_f: gf.b,
            b_c: gc.b,
            b_o: go.b,
            head_w,
            head_b,
        })
    }

    pub fn hidden(&self) -> usize {
        self.b_i.len()
    }

    pub fn input(&self) -> usize {
        self.w_i.rows() - self.hidden()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden();
        if self.w_i.rows() < h {
            return Err(ForecastError::shape(
                "gate matrix has fewer rows than hidden size",
            ));
        }
        let rows = self.w_i.rows();
        for (name, w) in [
            ("w_i", &self.w_i),
            ("w_f", &self.w_f),
            ("w_c", &self.w_c),
            ("w_o", &self.w_o),
        ] {
            if w.shape() != (rows, h) {
                return Err(ForecastError::shape(format!(
                    "{name} is {:?}, expected ({rows}, {h})",
                    w.shape()
                )));
            }
        }
        for (name, b) in [
            ("b_f", &self.b_f),
            ("b_c", &self.b_c),
            ("b_o", &self.b_o),
            ("head_w", &self.head_w),
        ] {
            if b.len() != h {
                return Err(ForecastError::shape(format!(
                    "{name} has length {}, expected {h}",
                    b.len()
                )));
            }
        }
        Ok(())
    }
}

impl Parameterized for LstmParams {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let (r, c) = self.w_i.shape();
        vec![
            TensorRef::new("w_i", vec![r, c], self.w_i.as_slice()),
            TensorRef::new("w_f", vec![r, c], self.w_f.as_slice()),
            TensorRef::new("w_c", vec![r, c], self.w_c.as_slice()),
            TensorRef::new("w_o", vec![r, c], self.w_o.as_slice()),
            TensorRef::new("b_i", vec![c], &self.b_i),
            TensorRef::new("b_f", vec![c], &self.b_f),
            TensorRef::new("b_c", vec![c], &self.b_c),
            TensorRef::new("b_o", vec![c], &self.b_o),
            TensorRef::new("head_w", vec![c], &self.head_w),
            TensorRef::new("head_b", vec![1], std::slice::from_ref(&self.head_b)),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        vec![
            TensorMut::new("w_i", self.w_i.as_mut_slice()),
            TensorMut::new("w_f", self.w_f.as_mut_slice()),
            TensorMut::new("w_c", self.w_c.as_mut_slice()),
            TensorMut::new("w_o", self.w_o.as_mut_slice()),
            TensorMut::new("b_i", &mut self.b_i),
            TensorMut::new("b_f", &mut self.b_f),
            TensorMut::new("b_c", &mut self.b_c),
            TensorMut::new("b_o", &mut self.b_o),
            TensorMut::new("head_w", &mut self.head_w),
            TensorMut::new("head_b", std::slice::from_mut(&mut self.head_b)),
        ]
    }
}

fn gate(w: &Matrix, b: &[f64], v: &[f64], act: fn(f64) -> f64) -> Vec<f64> {
    w.left_mul(v)
        .iter()
        .zip(b)
        .map(|(z, bb)| act(z + bb))
        .collect()
}

/// One time step. Returns `h_t`, the new state and the backward cache.
pub fn lstm_step(
    params: &LstmParams,
    x_t: &[f64],
    state: &LstmState,
) -> Result<(Vec<f64>, LstmState, StepCache)> {
    let hidden = params.hidden();
    if x_t.len() != params.input() {
        return Err(ForecastError::shape(format!(
            "input of width {} for an LSTM expecting {}",
            x_t.len(),
            params.input()
        )));
    }
    if state.h.len() != hidden || state.c.len() != hidden {
        return Err(ForecastError::shape(format!(
            "state widths ({}, {}) for hidden size {hidden}",
            state.h.len(),
            state.c.len()
        )));
    }
    ensure_finite(x_t, "LSTM input")?;

    let v = concat(&state.h, x_t);
    let i = gate(&params.w_i, &params.b_i, &v, sigmoid);
    let f = gate(&params.w_f, &params.b_f, &v, sigmoid);
    let c_tilde = gate(&params.w_c, &params.b_c, &v, f64::tanh);
    let o = gate(&params.w_o, &params.b_o, &v, sigmoid);
    let c: Vec<f64> = (0..hidden)
        .map(|k| i[k] * c_tilde[k] + f[k] * state.c[k])
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|x| x.tanh()).collect();
    let h: Vec<f64> = o.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();
    ensure_finite(&h, "LSTM hidden state")?;

    let cache = StepCache {
        v,
        i,
        f,
        c_tilde,
        o,
        c_prev: state.c.clone(),
        c: c.clone(),
        tanh_c,
    };
    Ok((h.clone(), LstmState { h, c }, cache))
}

/// Unrolls the cell from the zero state and applies the head to `h_T`.
pub fn lstm_forward(params: &LstmParams, sequence: &[Vec<f64>]) -> Result<(f64, LstmCache)> {
    if sequence.is_empty() {
        return Err(ForecastError::EmptyInput("LSTM sequence".into()));
    }
    params.validate()?;
    let mut state = LstmState::zeros(params.hidden());
    let mut steps = Vec::with_capacity(sequence.len());
    for x in sequence {
        let (_, next, cache) = lstm_step(params, x, &state)?;
        steps.push(cache);
        state = next;
    }
    let prediction = head(params, &state.h);
    Ok((
        prediction,
        LstmCache {
            steps,
            h_final: state.h,
        },
    ))
}

pub(crate) fn head(params: &LstmParams, h: &[f64]) -> f64 {
    params.head_w.iter().zip(h).map(|(w, h)| w * h).sum::<f64>() + params.head_b
}

/// Exact BPTT gradients of a loss whose derivative with respect to the
/// prediction is `upstream`.
pub fn lstm_backward(params: &LstmParams, cache: &LstmCache, upstream: f64) -> Result<LstmParams> {
    let hidden = params.hidden();
    let width = params.w_i.rows();
    if cache.h_final.len() != hidden
        || cache
            .steps
            .iter()
            .any(|s| s.v.len() != width || s.c.len() != hidden)
    {
        return Err(ForecastError::State(
            "forward cache does not match these parameters".into(),
        ));
    }
    let input = params.input();
    let mut grads = LstmParams::zeros(input, hidden);
    grads.head_b = upstream;
    for (g, h) in grads.head_w.iter_mut().zip(&cache.h_final) {
        *g = upstream * h;
    }

    let mut dh: Vec<f64> = params.head_w.iter().map(|w| w * upstream).collect();
    let mut dc_next = vec![0.0; hidden];
    let mut da_i = vec![0.0; hidden];
    let mut da_f = vec![0.0; hidden];
    let mut da_c = vec![0.0; hidden];
    let mut da_o = vec![0.0; hidden];

    for step in cache.steps.iter().rev() {
        for k in 0..hidden {
            let d_o = dh[k] * step.tanh_c[k];
            let dc = dc_next[k] + dh[k] * step.o[k] * (1.0 - step.tanh_c[k] * step.tanh_c[k]);
            let d_i = dc * step.c_tilde[k];
            let d_f = dc * step.c_prev[k];
            let d_ct = dc * step.i[k];
            da_i[k] = d_i * step.i[k] * (1.0 - step.i[k]);
            da_f[k] = d_f * step.f[k] * (1.0 - step.f[k]);
            da_c[k] = d_ct * (1.0 - step.c_tilde[k] * step.c_tilde[k]);
            da_o[k] = d_o * step.o[k] * (1.0 - step.o[k]);
            dc_next[k] = dc * step.f[k];
        }
        grads.w_i.add_outer(&step.v, &da_i);
        grads.w_f.add_outer(&step.v, &da_f);
        grads.w_c.add_outer(&step.v, &da_c);
        grads.w_o.add_outer(&step.v, &da_o);
        for k in 0..hidden {
            grads.b_i[k] += da_i[k];
            grads.b_f[k] += da_f[k];
            grads.b_c[k] += da_c[k];
            grads.b_o[k] += da_o[k];
        }
        // dv = W·da, summed over gates; the first `hidden` entries feed h_{t-1}.
        let mut dv = params.w_i.right_mul(&da_i);
        for (w, da) in [
            (&params.w_f, &da_f),
            (&params.w_c, &da_c),
            (&params.w_o, &da_o),
        ] {
            for (acc, x) in dv.iter_mut().zip(w.right_mul(da)) {
                *acc += x;
            }
        }
        dh.copy_from_slice(&dv[..hidden]);
    }
    Ok(grads)
}
