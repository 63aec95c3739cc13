//! Dense statevector simulator for small registers.
//!
//! Basis ordering: qubit `k` is bit `k` of the amplitude index, so qubit 0 is
//! the least-significant bit. Gates are applied by pairwise amplitude updates;
//! no `2^n x 2^n` matrix is ever formed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ForecastError, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 24;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Gate alphabet. The enum shape enforces "angle present exactly for
/// rotations" and "control only for CNOT".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum GateOp {
    H { target: usize },
    Rx { target: usize, angle: f64 },
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    Rx,
    Ry,
    Rz,
    Cnot,
}

impl GateOp {
    pub fn kind(&self) -> GateKind {
        match self {
            GateOp::H { .. } => GateKind::H,
            GateOp::Rx { .. } => GateKind::Rx,
            GateOp::Ry { .. } => GateKind::Ry,
            GateOp::Rz { .. } => GateKind::Rz,
            GateOp::Cnot { .. } => GateKind::Cnot,
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            GateOp::H { target }
            | GateOp::Rx { target, .. }
            | GateOp::Ry { target, .. }
            | GateOp::Rz { target, .. }
            | GateOp::Cnot { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            GateOp::Cnot { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateOp::Rx { angle, .. } | GateOp::Ry { angle, .. } | GateOp::Rz { angle, .. } => {
                Some(angle)
            }
            _ => None,
        }
    }

    /// Replaces the rotation angle; no-op for H and CNOT.
    pub fn set_angle(&mut self, new: f64) {
        match self {
            GateOp::Rx { angle, .. } | GateOp::Ry { angle, .. } | GateOp::Rz { angle, .. } => {
                *angle = new
            }
            _ => {}
        }
    }

    pub fn is_rotation(&self) -> bool {
        self.angle().is_some()
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let target = self.target();
        if target >= n_qubits {
            return Err(ForecastError::Index(format!(
                "{:?} targets qubit {target} on a {n_qubits}-qubit register",
                self.kind()
            )));
        }
        if let Some(control) = self.control() {
            if control >= n_qubits {
                return Err(ForecastError::Index(format!(
                    "CNOT control {control} on a {n_qubits}-qubit register"
                )));
            }
            if control == target {
                return Err(ForecastError::Index(format!(
                    "CNOT control and target are both qubit {control}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            ops: Vec::new(),
        }
    }

    pub fn with_ops(n_qubits: usize, ops: Vec<GateOp>) -> Result<Self> {
        let mut c = Circuit::new(n_qubits);
        for op in ops {
            c.push(op)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        self.ops.push(op);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    /// Mutable access for angle shifting. Callers may only change angles;
    /// qubit indices were validated on push.
    pub(crate) fn ops_mut(&mut self) -> &mut [GateOp] {
        &mut self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

impl StateVector {
    /// `|0...0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(ForecastError::Capacity(format!(
                "register of {n_qubits} qubits outside 1..={MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    /// Builds a state from raw amplitudes. The length must be a power of two;
    /// normalization is the caller's responsibility.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(ForecastError::shape(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(ForecastError::Capacity(format!(
                "register of {n_qubits} qubits exceeds {MAX_QUBITS}"
            )));
        }
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &GateOp) {
        match *gate {
            GateOp::H { target } => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_single(target, [[h, h], [h, -h]]);
            }
            GateOp::Rx { target, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let ms = Complex64::new(0.0, -s);
                self.apply_single(target, [[c, ms], [ms, c]]);
            }
            GateOp::Ry { target, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let (c, s) = (Complex64::new(c, 0.0), Complex64::new(s, 0.0));
                self.apply_single(target, [[c, -s], [s, c]]);
            }
            GateOp::Rz { target, angle } => self.apply_rz(target, angle),
            GateOp::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// Pairwise update over every (bit=0, bit=1) amplitude pair of `target`.
    fn apply_single(&mut self, target: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1usize << target;
        let len = self.amplitudes.len();
        let mut base = 0;
        while base < len {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    fn apply_rz(&mut self, target: usize, angle: f64) {
        let (s, c) = (angle / 2.0).sin_cos();
        let phase0 = Complex64::new(c, -s);
        let phase1 = Complex64::new(c, s);
        let mask = 1usize << target;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= if i & mask == 0 { phase0 } else { phase1 };
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }

    /// Runs every op of `circuit` in order, in place.
    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(ForecastError::shape(format!(
                "circuit on {} qubits applied to a {}-qubit state",
                circuit.n_qubits(),
                self.n_qubits
            )));
        }
        for op in circuit.ops() {
            self.apply_unchecked(op);
        }
        Ok(())
    }

    /// ⟨Z⟩ of one qubit, computed exactly from amplitudes.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(ForecastError::Index(format!(
                "qubit {qubit} on a {}-qubit register",
                self.n_qubits
            )));
        }
        let mask = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = a.norm_sqr();
                if i & mask == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum())
    }

    /// ⟨Z_k⟩ for every qubit in one pass over the amplitudes.
    pub fn expectations_z(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (k, e) in out.iter_mut().enumerate() {
                if i >> k & 1 == 0 {
                    *e += p;
                } else {
                    *e -= p;
                }
            }
        }
        out
    }
}

pub fn init_zero(n_qubits: usize) -> Result<StateVector> {
    StateVector::zero(n_qubits)
}

/// Pure gate application: returns the image of `state` under `gate`.
pub fn apply_gate(state: &StateVector, gate: &GateOp) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// Pure circuit execution.
pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    let mut out = state.clone();
    out.run(circuit)?;
    Ok(out)
}

pub fn expectation_z(state: &StateVector, qubit: usize) -> Result<f64> {
    state.expectation_z(qubit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn basis(n: usize, index: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn assert_amps(state: &StateVector, expected: &[f64]) {
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert!((a.re - e).abs() < 1e-12 && a.im.abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn zero_state() {
        assert_amps(&init_zero(2).unwrap(), &[1.0, 0.0, 0.0, 0.0]);
        assert_amps(&init_zero(1).unwrap(), &[1.0, 0.0]);
        assert!(matches!(init_zero(25), Err(ForecastError::Capacity(_))));
        assert!(matches!(init_zero(0), Err(ForecastError::Capacity(_))));
    }

    #[test]
    fn hadamard_on_zero() {
        let s = apply_gate(&init_zero(1).unwrap(), &GateOp::H { target: 0 }).unwrap();
        assert_amps(&s, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    }

    #[test]
    fn ry_pi_flips() {
        let s = apply_gate(
            &init_zero(1).unwrap(),
            &GateOp::Ry {
                target: 0,
                angle: PI,
            },
        )
        .unwrap();
        assert_amps(&s, &[0.0, 1.0]);
    }

    #[test]
    fn cnot_truth_table() {
        let gate = GateOp::Cnot {
            control: 0,
            target: 1,
        };
        // |q1 q0⟩: index 1 means q0 = 1.
        for (input, output) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
            let s = apply_gate(&basis(2, input), &gate).unwrap();
            let mut expected = [0.0; 4];
            expected[output] = 1.0;
            assert_amps(&s, &expected);
        }
        let rev = GateOp::Cnot {
            control: 1,
            target: 0,
        };
        for (input, output) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            let s = apply_gate(&basis(2, input), &rev).unwrap();
            let mut expected = [0.0; 4];
            expected[output] = 1.0;
            assert_amps(&s, &expected);
        }
    }

    #[test]
    fn bad_indices_rejected() {
        let s = init_zero(2).unwrap();
        assert!(matches!(
            apply_gate(&s, &GateOp::H { target: 2 }),
            Err(ForecastError::Index(_))
        ));
        assert!(matches!(
            apply_gate(
                &s,
                &GateOp::Cnot {
                    control: 1,
                    target: 1
                }
            ),
            Err(ForecastError::Index(_))
        ));
        assert!(matches!(
            apply_gate(
                &s,
                &GateOp::Cnot {
                    control: 5,
                    target: 0
                }
            ),
            Err(ForecastError::Index(_))
        ));
        assert!(matches!(s.expectation_z(2), Err(ForecastError::Index(_))));
        assert!(Circuit::with_ops(1, vec![GateOp::H { target: 1 }]).is_err());
    }

    #[test]
    fn empty_and_involutory_circuits() {
        let s = init_zero(2).unwrap();
        assert_eq!(apply_circuit(&s, &Circuit::new(2)).unwrap(), s);
        let hh =
            Circuit::with_ops(1, vec![GateOp::H { target: 0 }, GateOp::H { target: 0 }]).unwrap();
        assert_amps(
            &apply_circuit(&init_zero(1).unwrap(), &hh).unwrap(),
            &[1.0, 0.0],
        );
    }

    #[test]
    fn circuit_width_mismatch() {
        let s = init_zero(2).unwrap();
        assert!(matches!(
            apply_circuit(&s, &Circuit::new(3)),
            Err(ForecastError::Shape(_))
        ));
    }

    #[test]
    fn z_expectations() {
        assert_eq!(expectation_z(&basis(1, 0), 0).unwrap(), 1.0);
        assert_eq!(expectation_z(&basis(1, 1), 0).unwrap(), -1.0);
        let plus = apply_gate(&basis(1, 0), &GateOp::H { target: 0 }).unwrap();
        assert!(expectation_z(&plus, 0).unwrap().abs() < 1e-12);
        let s = basis(3, 0b101);
        assert_eq!(s.expectations_z(), vec![-1.0, 1.0, -1.0]);
    }

    #[test]
    fn rz_and_rx_match_definitions() {
        // RX(θ)|0⟩ has ⟨Z⟩ = cos θ, RZ leaves populations alone.
        let theta = 0.7;
        let mut s = init_zero(1).unwrap();
        s.apply(&GateOp::Rx {
            target: 0,
            angle: theta,
        })
        .unwrap();
        assert!((s.expectation_z(0).unwrap() - theta.cos()).abs() < 1e-14);
        let before = s
            .amplitudes()
            .iter()
            .map(|a| a.norm_sqr())
            .collect::<Vec<_>>();
        s.apply(&GateOp::Rz {
            target: 0,
            angle: 1.3,
        })
        .unwrap();
        let after = s
            .amplitudes()
            .iter()
            .map(|a| a.norm_sqr())
            .collect::<Vec<_>>();
        for (b, a) in before.iter().zip(&after) {
            assert!((b - a).abs() < 1e-15);
        }
    }
}
