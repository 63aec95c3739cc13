//! Dense-matrix circuit oracle: every gate is expanded into a full
//! `2^n x 2^n` unitary by Kronecker products and multiplied into one matrix.

use num_complex::Complex64;

pub type DenseMatrix = Vec<Vec<Complex64>>;

#[derive(Debug, Clone, Copy)]
pub enum OracleGate {
    H(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    /// (control, target)
    Cnot(usize, usize),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn identity(dim: usize) -> DenseMatrix {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                .collect()
        })
        .collect()
}

fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn single(gate: &OracleGate) -> DenseMatrix {
    match *gate {
        OracleGate::H(_) => {
            let s = 1.0 / 2f64.sqrt();
            vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]
        }
        OracleGate::Rx(_, t) => {
            let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
            vec![vec![c(co, 0.0), c(0.0, -si)], vec![c(0.0, -si), c(co, 0.0)]]
        }
        OracleGate::Ry(_, t) => {
            let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
            vec![vec![c(co, 0.0), c(-si, 0.0)], vec![c(si, 0.0), c(co, 0.0)]]
        }
        OracleGate::Rz(_, t) => vec![
            vec![c((t / 2.0).cos(), -(t / 2.0).sin()), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c((t / 2.0).cos(), (t / 2.0).sin())],
        ],
        OracleGate::Cnot(..) => unreachable!(),
    }
}

/// Full unitary of one gate on `n` qubits, qubit 0 = least-significant bit.
pub fn gate_unitary(gate: &OracleGate, n: usize) -> DenseMatrix {
    match *gate {
        OracleGate::Cnot(control, target) => {
            // Permutation matrix built from the truth table.
            let dim = 1 << n;
            let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
            for col in 0..dim {
                let row = if col >> control & 1 == 1 {
                    col ^ (1 << target)
                } else {
                    col
                };
                m[row][col] = c(1.0, 0.0);
            }
            m
        }
        OracleGate::H(q) | OracleGate::Rx(q, _) | OracleGate::Ry(q, _) | OracleGate::Rz(q, _) => {
            // Kronecker order: highest qubit leftmost.
            let mut m = identity(1);
            for k in (0..n).rev() {
                let factor = if k == q { single(gate) } else { identity(2) };
                m = kron(&m, &factor);
            }
            m
        }
    }
}

/// Product `U_last ... U_first` of the circuit.
pub fn circuit_unitary(gates: &[OracleGate], n: usize) -> DenseMatrix {
    gates
        .iter()
        .fold(identity(1 << n), |acc, g| matmul(&gate_unitary(g, n), &acc))
}

/// `U |0...0⟩`.
pub fn run_from_zero(gates: &[OracleGate], n: usize) -> Vec<Complex64> {
    let u = circuit_unitary(gates, n);
    u.iter().map(|row| row[0]).collect()
}

/// ⟨Z_q⟩ from amplitudes.
pub fn z_expectation(amps: &[Complex64], q: usize) -> f64 {
    amps.iter()
        .enumerate()
        .map(|(i, a)| {
            if i >> q & 1 == 0 {
                a.norm_sqr()
            } else {
                -a.norm_sqr()
            }
        })
        .sum()
}
