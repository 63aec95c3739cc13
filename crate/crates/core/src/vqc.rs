//! Variational quantum circuit layer.
//!
//! A VQC maps a classical vector `v` (one component per qubit) to the vector
//! of per-qubit Pauli-Z expectations of
//!
//! ```text
//! encoding(v) ; [ RX RY RZ on every qubit ; CNOT ring ] x n_layers
//! ```
//!
//! Gradients with respect to both the variational angles and the inputs use
//! the ±π/2 parameter-shift rule, which is exact for RX/RY/RZ.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ForecastError, Result};
use crate::statevector::{Circuit, GateOp, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// `H, RY(arctan v), RZ(arctan v²)` per qubit.
    #[default]
    AngleArctan,
    /// `RY(v)` per qubit.
    AngleLinear,
}

impl std::str::FromStr for Encoding {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angle_arctan" => Ok(Encoding::AngleArctan),
            "angle_linear" => Ok(Encoding::AngleLinear),
            other => Err(ForecastError::Format(format!("unknown encoding `{other}`"))),
        }
    }
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Encoding::AngleArctan => "angle_arctan",
            Encoding::AngleLinear => "angle_linear",
        })
    }
}

/// Architecture of one VQC. The entangler is always the CNOT ring
/// `k -> k+1 mod n`, emitted only for two or more qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VqcDescriptor {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub encoding: Encoding,
}

impl VqcDescriptor {
    pub fn new(n_qubits: usize, n_layers: usize, encoding: Encoding) -> Result<Self> {
        if n_qubits == 0 || n_qubits > crate::statevector::MAX_QUBITS {
            return Err(ForecastError::Capacity(format!(
                "VQC with {n_qubits} qubits"
            )));
        }
        Ok(VqcDescriptor {
            n_qubits,
            n_layers,
            encoding,
        })
    }

    /// Number of trainable angles.
    pub fn n_angles(&self) -> usize {
        self.n_layers * self.n_qubits * 3
    }
}

/// Trainable angles, laid out `[layer][qubit][rx, ry, rz]` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqcParams {
    pub angles: Vec<f64>,
}

impl VqcParams {
    pub fn zeros(desc: &VqcDescriptor) -> Self {
        VqcParams {
            angles: vec![0.0; desc.n_angles()],
        }
    }

    /// Angles drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng>(desc: &VqcDescriptor, scale: f64, rng: &mut R) -> Self {
        VqcParams {
            angles: (0..desc.n_angles())
                .map(|_| rng.gen_range(-scale..=scale))
                .collect(),
        }
    }

    #[inline]
    pub fn index(desc: &VqcDescriptor, layer: usize, qubit: usize, axis: usize) -> usize {
        (layer * desc.n_qubits + qubit) * 3 + axis
    }

    pub fn get(&self, desc: &VqcDescriptor, layer: usize, qubit: usize, axis: usize) -> f64 {
        self.angles[Self::index(desc, layer, qubit, axis)]
    }

    fn check(&self, desc: &VqcDescriptor) -> Result<()> {
        if self.angles.len() != desc.n_angles() {
            return Err(ForecastError::shape(format!(
                "VQC expects {} angles ({} layers x {} qubits x 3), got {}",
                desc.n_angles(),
                desc.n_layers,
                desc.n_qubits,
                self.angles.len()
            )));
        }
        Ok(())
    }
}

/// Gradients returned by [`vqc_gradients`].
#[derive(Debug, Clone, PartialEq)]
pub struct VqcGradients {
    /// Same layout as [`VqcParams::angles`].
    pub angles: Vec<f64>,
    /// One entry per input component.
    pub inputs: Vec<f64>,
}

fn check_input(desc: &VqcDescriptor, v: &[f64]) -> Result<()> {
    if v.len() != desc.n_qubits {
        return Err(ForecastError::shape(format!(
            "VQC input of length {} for {} qubits",
            v.len(),
            desc.n_qubits
        )));
    }
    ensure_finite(v, "VQC input")
}

/// Encoding-only circuit for `v`.
pub fn build_encoding(desc: &VqcDescriptor, v: &[f64]) -> Result<Circuit> {
    check_input(desc, v)?;
    let mut circuit = Circuit::new(desc.n_qubits);
    push_encoding(desc, v, &mut circuit, &mut Vec::new())?;
    Ok(circuit)
}

/// Op indices of the encoding rotations of one qubit.
#[derive(Debug, Clone, Copy)]
struct EncodingSlot {
    ry: usize,
    rz: Option<usize>,
}

fn push_encoding(
    desc: &VqcDescriptor,
    v: &[f64],
    circuit: &mut Circuit,
    slots: &mut Vec<EncodingSlot>,
) -> Result<()> {
    for (target, &x) in v.iter().enumerate() {
        match desc.encoding {
            Encoding::AngleArctan => {
                circuit.push(GateOp::H { target })?;
                let ry = circuit.len();
                circuit.push(GateOp::Ry {
                    target,
                    angle: x.atan(),
                })?;
                let rz = circuit.len();
                circuit.push(GateOp::Rz {
                    target,
                    angle: (x * x).atan(),
                })?;
                slots.push(EncodingSlot { ry, rz: Some(rz) });
            }
            Encoding::AngleLinear => {
                let ry = circuit.len();
                circuit.push(GateOp::Ry { target, angle: x })?;
                slots.push(EncodingSlot { ry, rz: None });
            }
        }
    }
    Ok(())
}

/// Full circuit plus the op positions the gradient routine needs to shift.
struct Layout {
    circuit: Circuit,
    encoding: Vec<EncodingSlot>,
    /// Op index of each trainable angle, in [`VqcParams`] order.
    angle_ops: Vec<usize>,
}

fn build_layout(desc: &VqcDescriptor, params: &VqcParams, v: &[f64]) -> Result<Layout> {
    params.check(desc)?;
    check_input(desc, v)?;
    ensure_finite(&params.angles, "VQC angles")?;
    let n = desc.n_qubits;
    let mut circuit = Circuit::new(n);
    let mut encoding = Vec::with_capacity(n);
    push_encoding(desc, v, &mut circuit, &mut encoding)?;
    let mut angle_ops = Vec::with_capacity(desc.n_angles());
    for layer in 0..desc.n_layers {
        for target in 0..n {
            let base = VqcParams::index(desc, layer, target, 0);
            let a = &params.angles[base..base + 3];
            angle_ops.push(circuit.len());
            circuit.push(GateOp::Rx {
                target,
                angle: a[0],
            })?;
            angle_ops.push(circuit.len());
            circuit.push(GateOp::Ry {
                target,
                angle: a[1],
            })?;
            angle_ops.push(circuit.len());
            circuit.push(GateOp::Rz {
                target,
                angle: a[2],
            })?;
        }
        if n >= 2 {
            for control in 0..n {
                circuit.push(GateOp::Cnot {
                    control,
                    target: (control + 1) % n,
                })?;
            }
        }
    }
    Ok(Layout {
        circuit,
        encoding,
        angle_ops,
    })
}

/// Complete circuit (encoding followed by the variational layers).
pub fn build_circuit(desc: &VqcDescriptor, params: &VqcParams, v: &[f64]) -> Result<Circuit> {
    Ok(build_layout(desc, params, v)?.circuit)
}

/// Per-qubit ⟨Z⟩ after running the VQC on `v`.
pub fn vqc_forward(desc: &VqcDescriptor, params: &VqcParams, v: &[f64]) -> Result<Vec<f64>> {
    let layout = build_layout(desc, params, v)?;
    if layout.circuit.ops().iter().all(|op| op.control().is_none()) {
        return product_expectations(desc.n_qubits, &layout.circuit);
    }
    let mut state = StateVector::zero(desc.n_qubits)?;
    state.run(&layout.circuit)?;
    Ok(state.expectations_z())
}

/// Without entangling gates the state is a product, so each qubit is
/// simulated on its own. Besides being cheaper this makes output `k` a
/// function of qubit `k`'s gates alone, bit for bit.
fn product_expectations(n_qubits: usize, circuit: &Circuit) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_qubits);
    for q in 0..n_qubits {
        let mut state = StateVector::zero(1)?;
        for op in circuit.ops().iter().filter(|op| op.target() == q) {
            let local = match *op {
                GateOp::H { .. } => GateOp::H { target: 0 },
                GateOp::Rx { angle, .. } => GateOp::Rx { target: 0, angle },
                GateOp::Ry { angle, .. } => GateOp::Ry { target: 0, angle },
                GateOp::Rz { angle, .. } => GateOp::Rz { target: 0, angle },
                GateOp::Cnot { .. } => unreachable!("product circuits have no CNOT"),
            };
            state.apply(&local)?;
        }
        out.push(state.expectation_z(0)?);
    }
    Ok(out)
}

/// Parameter-shift gradients of `Σ_j upstream_j · E_j` with respect to the
/// variational angles and the input vector.
pub fn vqc_gradients(
    desc: &VqcDescriptor,
    params: &VqcParams,
    v: &[f64],
    upstream: &[f64],
) -> Result<VqcGradients> {
    let layout = build_layout(desc, params, v)?;
    if upstream.len() != desc.n_qubits {
        return Err(ForecastError::shape(format!(
            "upstream gradient of length {} for {} outputs",
            upstream.len(),
            desc.n_qubits
        )));
    }
    let mut grads = VqcGradients {
        angles: vec![0.0; desc.n_angles()],
        inputs: vec![0.0; desc.n_qubits],
    };
    if upstream.iter().all(|&u| u == 0.0) {
        return Ok(grads);
    }

    // op index -> d(objective)/d(angle of that op)
    let op_grads = shift_all(layout.circuit, upstream)?;

    for (g, &op) in grads.angles.iter_mut().zip(&layout.angle_ops) {
        *g = op_grads[op];
    }
    for ((g, slot), &x) in grads.inputs.iter_mut().zip(&layout.encoding).zip(v) {
        *g = match slot.rz {
            // d atan(x)/dx = 1/(1+x²);  d atan(x²)/dx = 2x/(1+x⁴)
            Some(rz) => {
                op_grads[slot.ry] / (1.0 + x * x) + op_grads[rz] * 2.0 * x / (1.0 + x.powi(4))
            }
            None => op_grads[slot.ry],
        };
    }
    Ok(grads)
}

/// Shift-rule derivative for every rotation op of `circuit`; zero for the
/// rest. The state before each op is carried forward so every shifted
/// evaluation only replays the suffix.
fn shift_all(mut circuit: Circuit, upstream: &[f64]) -> Result<Vec<f64>> {
    let n = circuit.n_qubits();
    let n_ops = circuit.len();
    let mut out = vec![0.0; n_ops];
    let mut prefix = StateVector::zero(n)?;
    for i in 0..n_ops {
        let op = circuit.ops()[i];
        if let Some(theta) = op.angle() {
            let objective = |shift: f64, circuit: &mut Circuit| {
                circuit.ops_mut()[i].set_angle(theta + shift);
                let mut s = prefix.clone();
                for g in &circuit.ops()[i..] {
                    s.apply_unchecked(g);
                }
                s.expectations_z()
                    .iter()
                    .zip(upstream)
                    .map(|(e, u)| e * u)
                    .sum::<f64>()
            };
            let plus = objective(FRAC_PI_2, &mut circuit);
            let minus = objective(-FRAC_PI_2, &mut circuit);
            circuit.ops_mut()[i].set_angle(theta);
            out[i] = (plus - minus) / 2.0;
        }
        prefix.apply_unchecked(&op);
    }
    Ok(out)
}
