//! Hybrid quantum-classical LSTM cell built from six VQCs.
//!
//! With `v_t = [h_{t-1}, x_t]` and `u_t = v_t · in_proj` (one entry per qubit):
//!
//! ```text
//! f_t = σ(mix(VQC1(u_t)))     i_t = σ(mix(VQC2(u_t)))
//! C̃_t = tanh(mix(VQC3(u_t)))  o_t = σ(mix(VQC4(u_t)))
//! C_t = f_t∘C_{t-1} + i_t∘C̃_t
//! z_t = o_t∘tanh(C_t)
//! h_t = VQC5(read(z_t)) · out_proj_h
//! y_t = VQC6(read(z_t)) · out_proj_y + out_bias
//! ```
//!
//! When `hidden == n_qubits`, `mix` and `read` are identities. Otherwise
//! `mix` is a column-softmax of the `cell_proj` logits (every hidden unit is
//! a convex combination of qubit readouts, so gate pre-activations stay in
//! `[-1, 1]`) and `read` is the linear map `read_proj`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ForecastError, Result};
use crate::linalg::{concat, sigmoid, Matrix};
use crate::model::{Parameterized, TensorMut, TensorRef};
use crate::vqc::{vqc_forward, vqc_gradients, VqcDescriptor, VqcParams};

/// Angle scale used by [`QlstmParams::init`].
pub const INIT_ANGLE_SCALE: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlstmParams {
    pub descriptor: VqcDescriptor,
    /// VQC1..VQC6 in order: forget, input, candidate, output, hidden, output head.
    pub vqcs: [VqcParams; 6],
    pub in_proj: Matrix,
    pub out_proj_h: Matrix,
    pub out_proj_y: Vec<f64>,
    pub out_bias: f64,
    /// Mixing logits `[n_qubits x hidden]`, present iff `hidden != n_qubits`.
    pub cell_proj: Option<Matrix>,
    /// `[hidden x n_qubits]`, present iff `hidden != n_qubits`.
    pub read_proj: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QlstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl QlstmState {
    pub fn zeros(hidden: usize) -> Self {
        QlstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QlstmStepCache {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    /// Raw outputs of VQC1..VQC4.
    pub gate_readouts: [Vec<f64>; 4],
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub c_tilde: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub z: Vec<f64>,
    pub zq: Vec<f64>,
    pub e5: Vec<f64>,
    pub e6: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QlstmCache {
    pub steps: Vec<QlstmStepCache>,
}

/// Column-wise softmax over the qubit axis.
fn mixing_weights(logits: &Matrix) -> Matrix {
    let (rows, cols) = logits.shape();
    let mut out = Matrix::zeros(rows, cols);
    for j in 0..cols {
        let max = (0..rows)
            .map(|q| logits.get(q, j))
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = (0..rows).map(|q| (logits.get(q, j) - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (q, e) in exps.iter().enumerate() {
            out.set(q, j, e / total);
        }
    }
    out
}

impl QlstmParams {
    pub fn zeros(descriptor: VqcDescriptor, input: usize, hidden: usize) -> Self {
        let nq = descriptor.n_qubits;
        let bridged = hidden != nq;
        QlstmParams {
            descriptor,
            vqcs: std::array::from_fn(|_| VqcParams::zeros(&descriptor)),
            in_proj: Matrix::zeros(hidden + input, nq),
            out_proj_h: Matrix::zeros(nq, hidden),
            out_proj_y: vec![0.0; nq],
            out_bias: 0.0,
            cell_proj: bridged.then(|| Matrix::zeros(nq, hidden)),
            read_proj: bridged.then(|| Matrix::zeros(hidden, nq)),
        }
    }

    /// Seeded initialization: angles uniform in `[-π, π]`, projections
    /// uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, mixing logits uniform
    /// in `[-1, 1]`, zero output bias.
    pub fn init<R: Rng>(
        descriptor: VqcDescriptor,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let nq = descriptor.n_qubits;
        let uniform = |rows: usize, cols: usize, k: f64, rng: &mut R| {
            Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-k..=k))
        };
        let vqcs = std::array::from_fn(|_| VqcParams::random(&descriptor, INIT_ANGLE_SCALE, rng));
        let in_proj = uniform(
            hidden + input,
            nq,
            1.0 / ((hidden + input) as f64).sqrt(),
            rng,
        );
        let kq = 1.0 / (nq as f64).sqrt();
        let out_proj_h = uniform(nq, hidden, kq, rng);
        let out_proj_y = (0..nq).map(|_| rng.gen_range(-kq..=kq)).collect();
        let (cell_proj, read_proj) = if hidden != nq {
            (
                Some(uniform(nq, hidden, 1.0, rng)),
                Some(uniform(hidden, nq, 1.0 / (hidden as f64).sqrt(), rng)),
            )
        } else {
            (None, None)
        };
        QlstmParams {
            descriptor,
            vqcs,
            in_proj,
            out_proj_h,
            out_proj_y,
            out_bias: 0.0,
            cell_proj,
            read_proj,
        }
    }

    pub fn hidden(&self) -> usize {
        self.out_proj_h.cols()
    }

    pub fn input(&self) -> usize {
        self.in_proj.rows() - self.hidden()
    }

    pub fn n_qubits(&self) -> usize {
        self.descriptor.n_qubits
    }

    fn zeros_like(&self) -> Self {
        QlstmParams::zeros(self.descriptor, self.input(), self.hidden())
    }

    pub fn validate(&self) -> Result<()> {
        let nq = self.n_qubits();
        let hidden = self.hidden();
        if self.in_proj.cols() != nq || self.in_proj.rows() < hidden {
            return Err(ForecastError::shape(format!(
                "in_proj is {:?} for {nq} qubits and hidden {hidden}",
                self.in_proj.shape()
            )));
        }
        if self.out_proj_h.rows() != nq || self.out_proj_y.len() != nq {
            return Err(ForecastError::shape(
                "output projections do not match n_qubits",
            ));
        }
        for v in &self.vqcs {
            if v.angles.len() != self.descriptor.n_angles() {
                return Err(ForecastError::shape(
                    "VQC angle count does not match descriptor",
                ));
            }
        }
        let bridged = hidden != nq;
        match (&self.cell_proj, &self.read_proj) {
            (Some(c), Some(r)) if bridged => {
                if c.shape() != (nq, hidden) || r.shape() != (hidden, nq) {
                    return Err(ForecastError::shape("cell_proj/read_proj shapes"));
                }
            }
            (None, None) if !bridged => {}
            _ => {
                return Err(ForecastError::shape(
                    "cell_proj/read_proj must be present exactly when hidden != n_qubits",
                ))
            }
        }
        Ok(())
    }

    fn mix(&self, weights: Option<&Matrix>, readout: &[f64]) -> Vec<f64> {
        let pre = match weights {
            Some(w) => w.left_mul(readout),
            None => readout.to_vec(),
        };
        // Rounding can leave a readout a few ulps outside [-1, 1].
        pre.into_iter().map(|a| a.clamp(-1.0, 1.0)).collect()
    }
}

impl Parameterized for QlstmParams {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let d = &self.descriptor;
        let vqc_shape = vec![d.n_layers, d.n_qubits, 3];
        let names = ["vqc1", "vqc2", "vqc3", "vqc4", "vqc5", "vqc6"];
        let mut out: Vec<TensorRef<'_>> = names
            .iter()
            .zip(&self.vqcs)
            .map(|(n, v)| TensorRef::new(n, vqc_shape.clone(), &v.angles))
            .collect();
        let shape = |m: &Matrix| vec![m.rows(), m.cols()];
        out.push(TensorRef::new(
            "in_proj",
            shape(&self.in_proj),
            self.in_proj.as_slice(),
        ));
        out.push(TensorRef::new(
            "out_proj_h",
            shape(&self.out_proj_h),
            self.out_proj_h.as_slice(),
        ));
        out.push(TensorRef::new(
            "out_proj_y",
            vec![self.out_proj_y.len(), 1],
            &self.out_proj_y,
        ));
        out.push(TensorRef::new(
            "out_bias",
            vec![1],
            std::slice::from_ref(&self.out_bias),
        ));
        if let Some(c) = &self.cell_proj {
            out.push(TensorRef::new("cell_proj", shape(c), c.as_slice()));
        }
        if let Some(r) = &self.read_proj {
            out.push(TensorRef::new("read_proj", shape(r), r.as_slice()));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let names = ["vqc1", "vqc2", "vqc3", "vqc4", "vqc5", "vqc6"];
        let mut out: Vec<TensorMut<'_>> = names
            .iter()
            .zip(self.vqcs.iter_mut())
            .map(|(n, v)| TensorMut::new(n, &mut v.angles))
            .collect();
        out.push(TensorMut::new("in_proj", self.in_proj.as_mut_slice()));
        out.push(TensorMut::new("out_proj_h", self.out_proj_h.as_mut_slice()));
        out.push(TensorMut::new("out_proj_y", &mut self.out_proj_y));
        out.push(TensorMut::new(
            "out_bias",
            std::slice::from_mut(&mut self.out_bias),
        ));
        if let Some(c) = &mut self.cell_proj {
            out.push(TensorMut::new("cell_proj", c.as_mut_slice()));
        }
        if let Some(r) = &mut self.read_proj {
            out.push(TensorMut::new("read_proj", r.as_mut_slice()));
        }
        out
    }
}

fn check_gate_bounds(cache: &QlstmStepCache) -> Result<()> {
    let (lo, hi) = (sigmoid(-1.0), sigmoid(1.0));
    let (tlo, thi) = ((-1f64).tanh(), 1f64.tanh());
    let gates_ok = [&cache.i, &cache.f, &cache.o]
        .iter()
        .all(|g| g.iter().all(|&x| (lo..=hi).contains(&x)));
    let cand_ok = cache.c_tilde.iter().all(|&x| (tlo..=thi).contains(&x));
    if gates_ok && cand_ok {
        Ok(())
    } else {
        Err(ForecastError::Numeric(
            "QLSTM gate activation left its VQC-implied range".into(),
        ))
    }
}

/// One QLSTM time step: returns `(y_t, h_t, new_state, cache)`.
pub fn qlstm_step(
    params: &QlstmParams,
    x_t: &[f64],
    state: &QlstmState,
) -> Result<(f64, Vec<f64>, QlstmState, QlstmStepCache)> {
    let hidden = params.hidden();
    if x_t.len() != params.input() {
        return Err(ForecastError::shape(format!(
            "input of width {} for a QLSTM expecting {}",
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
    ensure_finite(x_t, "QLSTM input")?;

    let d = &params.descriptor;
    let v = concat(&state.h, x_t);
    let u = params.in_proj.left_mul(&v);
    let mixing = params.cell_proj.as_ref().map(mixing_weights);
    let readouts: [Vec<f64>; 4] = [
        vqc_forward(d, &params.vqcs[0], &u)?,
        vqc_forward(d, &params.vqcs[1], &u)?,
        vqc_forward(d, &params.vqcs[2], &u)?,
        vqc_forward(d, &params.vqcs[3], &u)?,
    ];
    let pre = |k: usize| params.mix(mixing.as_ref(), &readouts[k]);
    let f: Vec<f64> = pre(0).into_iter().map(sigmoid).collect();
    let i: Vec<f64> = pre(1).into_iter().map(sigmoid).collect();
    let c_tilde: Vec<f64> = pre(2).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = pre(3).into_iter().map(sigmoid).collect();

    let c: Vec<f64> = (0..hidden)
        .map(|k| f[k] * state.c[k] + i[k] * c_tilde[k])
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|x| x.tanh()).collect();
    let z: Vec<f64> = o.iter().zip(&tanh_c).map(|(o, t)| o * t).collect();
    let zq = match &params.read_proj {
        Some(r) => r.left_mul(&z),
        None => z.clone(),
    };
    let e5 = vqc_forward(d, &params.vqcs[4], &zq)?;
    let e6 = vqc_forward(d, &params.vqcs[5], &zq)?;
    let h = params.out_proj_h.left_mul(&e5);
    let y = e6
        .iter()
        .zip(&params.out_proj_y)
        .map(|(e, w)| e * w)
        .sum::<f64>()
        + params.out_bias;
    ensure_finite(&h, "QLSTM hidden state")?;
    ensure_finite(&[y], "QLSTM output")?;

    let cache = QlstmStepCache {
        v,
        u,
        gate_readouts: readouts,
        f,
        i,
        c_tilde,
        o,
        c_prev: state.c.clone(),
        c: c.clone(),
        tanh_c,
        z,
        zq,
        e5,
        e6,
        y,
    };
    check_gate_bounds(&cache)?;
    Ok((y, h.clone(), QlstmState { h, c }, cache))
}

/// Unrolls from the zero state; the prediction is `y_T`.
pub fn qlstm_forward(params: &QlstmParams, sequence: &[Vec<f64>]) -> Result<(f64, QlstmCache)> {
    if sequence.is_empty() {
        return Err(ForecastError::EmptyInput("QLSTM sequence".into()));
    }
    params.validate()?;
    let mut state = QlstmState::zeros(params.hidden());
    let mut steps = Vec::with_capacity(sequence.len());
    let mut y = 0.0;
    for x in sequence {
        let (y_t, _, next, cache) = qlstm_step(params, x, &state)?;
        steps.push(cache);
        state = next;
        y = y_t;
    }
    Ok((y, QlstmCache { steps }))
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

/// Hybrid gradients: chain rule through the classical parts, parameter
/// shift through every VQC (angles and inputs), carried back through
/// `h_{t-1}` and `C_{t-1}`.
pub fn qlstm_backward(
    params: &QlstmParams,
    cache: &QlstmCache,
    upstream: f64,
) -> Result<QlstmParams> {
    let hidden = params.hidden();
    let nq = params.n_qubits();
    let width = params.in_proj.rows();
    if cache.steps.is_empty()
        || cache
            .steps
            .iter()
            .any(|s| s.v.len() != width || s.c.len() != hidden || s.u.len() != nq)
    {
        return Err(ForecastError::State(
            "forward cache does not match these parameters".into(),
        ));
    }
    let d = &params.descriptor;
    let mut grads = params.zeros_like();
    let mixing = params.cell_proj.as_ref().map(mixing_weights);
    let mut d_mixing = Matrix::zeros(nq, hidden);

    let mut dh = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let last = cache.steps.len() - 1;

    for (t, step) in cache.steps.iter().enumerate().rev() {
        let dy = if t == last { upstream } else { 0.0 };

        // y = e6·out_proj_y + bias
        grads.out_bias += dy;
        let mut d_zq = vec![0.0; nq];
        if dy != 0.0 {
            for (g, e) in grads.out_proj_y.iter_mut().zip(&step.e6) {
                *g += dy * e;
            }
            let d_e6: Vec<f64> = params.out_proj_y.iter().map(|w| w * dy).collect();
            let g6 = vqc_gradients(d, &params.vqcs[5], &step.zq, &d_e6)?;
            add_into(&mut grads.vqcs[5].angles, &g6.angles);
            add_into(&mut d_zq, &g6.inputs);
        }

        // h = e5·out_proj_h
        grads.out_proj_h.add_outer(&step.e5, &dh);
        let d_e5 = params.out_proj_h.right_mul(&dh);
        let g5 = vqc_gradients(d, &params.vqcs[4], &step.zq, &d_e5)?;
        add_into(&mut grads.vqcs[4].angles, &g5.angles);
        add_into(&mut d_zq, &g5.inputs);

        let dz = match (&params.read_proj, &mut grads.read_proj) {
            (Some(r), Some(gr)) => {
                gr.add_outer(&step.z, &d_zq);
                r.right_mul(&d_zq)
            }
            _ => d_zq,
        };

        // gate pre-activation gradients, order f, i, c̃, o
        let mut d_pre: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hidden]);
        for k in 0..hidden {
            let d_o = dz[k] * step.tanh_c[k];
            let dc = dc_next[k] + dz[k] * step.o[k] * (1.0 - step.tanh_c[k] * step.tanh_c[k]);
            d_pre[0][k] = dc * step.c_prev[k] * step.f[k] * (1.0 - step.f[k]);
            d_pre[1][k] = dc * step.c_tilde[k] * step.i[k] * (1.0 - step.i[k]);
            d_pre[2][k] = dc * step.i[k] * (1.0 - step.c_tilde[k] * step.c_tilde[k]);
            d_pre[3][k] = d_o * step.o[k] * (1.0 - step.o[k]);
            dc_next[k] = dc * step.f[k];
        }

        let mut du = vec![0.0; nq];
        for (g, dp) in d_pre.iter().enumerate() {
            let d_readout = match &mixing {
                Some(w) => {
                    d_mixing.add_outer(&step.gate_readouts[g], dp);
                    w.right_mul(dp)
                }
                None => dp.clone(),
            };
            let gq = vqc_gradients(d, &params.vqcs[g], &step.u, &d_readout)?;
            add_into(&mut grads.vqcs[g].angles, &gq.angles);
            add_into(&mut du, &gq.inputs);
        }

        // u = v·in_proj
        grads.in_proj.add_outer(&step.v, &du);
        let dv = params.in_proj.right_mul(&du);
        dh.copy_from_slice(&dv[..hidden]);
    }

    // softmax Jacobian per column: dW[q,j] = P[q,j] (dP[q,j] - Σ_q' P[q',j] dP[q',j])
    if let (Some(w), Some(g)) = (&mixing, &mut grads.cell_proj) {
        for j in 0..hidden {
            let dot: f64 = (0..nq).map(|q| w.get(q, j) * d_mixing.get(q, j)).sum();
            for q in 0..nq {
                g.set(q, j, w.get(q, j) * (d_mixing.get(q, j) - dot));
            }
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vqc::Encoding;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desc(n: usize, layers: usize) -> VqcDescriptor {
        VqcDescriptor::new(n, layers, Encoding::AngleArctan).unwrap()
    }

    #[test]
    fn zero_network_outputs_bias() {
        let mut p = QlstmParams::zeros(desc(4, 2), 3, 2);
        p.out_bias = 0.37;
        let (y, h, state, cache) =
            qlstm_step(&p, &[1.0, -2.0, 5.0], &QlstmState::zeros(2)).unwrap();
        for r in &cache.gate_readouts {
            assert!(r.iter().all(|e| e.abs() < 1e-12));
        }
        for g in [&cache.i, &cache.f, &cache.o] {
            assert!(g.iter().all(|x| (x - 0.5).abs() < 1e-12));
        }
        assert!(cache.c_tilde.iter().all(|x| x.abs() < 1e-12));
        assert!(state.c.iter().all(|x| x.abs() < 1e-12));
        assert_eq!(h, vec![0.0; 2]);
        assert_eq!(y, 0.37);
        let (pred, _) = qlstm_forward(&p, &[vec![0.1, 0.2, 0.3], vec![9.0, -9.0, 0.0]]).unwrap();
        assert_eq!(pred, 0.37);
    }

    #[test]
    fn bridging_projections_only_when_needed() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let same = QlstmParams::init(desc(4, 1), 2, 4, &mut rng);
        assert!(same.cell_proj.is_none() && same.read_proj.is_none());
        let bridged = QlstmParams::init(desc(4, 1), 2, 3, &mut rng);
        assert_eq!(bridged.cell_proj.as_ref().unwrap().shape(), (4, 3));
        assert_eq!(bridged.read_proj.as_ref().unwrap().shape(), (3, 4));
        assert!(bridged.tensors().iter().any(|t| t.name == "cell_proj"));
    }

    #[test]
    fn mixing_columns_are_distributions() {
        let logits = Matrix::from_vec(3, 2, vec![0.0, 5.0, 1.0, -1.0, 2.0, 0.5]).unwrap();
        let w = mixing_weights(&logits);
        for j in 0..2 {
            let s: f64 = (0..3).map(|q| w.get(q, j)).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bias_gradient_equals_upstream() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = QlstmParams::init(desc(4, 1), 2, 2, &mut rng);
        let seq = vec![vec![0.2, 0.1], vec![0.5, -0.3]];
        let (_, cache) = qlstm_forward(&p, &seq).unwrap();
        let g = qlstm_backward(&p, &cache, 0.625).unwrap();
        assert_eq!(g.out_bias, 0.625);
        let zero = qlstm_backward(&p, &cache, 0.0).unwrap();
        assert!(zero.flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn errors() {
        let p = QlstmParams::zeros(desc(2, 1), 1, 2);
        assert!(matches!(
            qlstm_forward(&p, &[]),
            Err(ForecastError::EmptyInput(_))
        ));
        assert!(matches!(
            qlstm_forward(&p, &[vec![1.0, 2.0]]),
            Err(ForecastError::Shape(_))
        ));
        assert!(matches!(
            qlstm_forward(&p, &[vec![f64::NAN]]),
            Err(ForecastError::Numeric(_))
        ));
        let other = QlstmParams::zeros(desc(2, 1), 2, 2);
        let (_, cache) = qlstm_forward(&other, &[vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            qlstm_backward(&p, &cache, 1.0),
            Err(ForecastError::State(_))
        ));
    }
}
