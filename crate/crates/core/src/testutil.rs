//! Shared helpers for unit tests.

use crate::scalar::Scalar;
use crate::statevector::{Circuit, GateOp, PureState};
use num_complex::Complex;
use rand::Rng;

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        (a - b).abs() <= tol,
        "{what}: {a} vs {b} (|diff| = {:e} > {tol:e})",
        (a - b).abs()
    );
}

/// Asserts two matrices are equal up to one global phase.
pub fn assert_matrix_phase_equal(
    u: &[Vec<Complex<f64>>],
    v: &[Vec<Complex<f64>>],
    tol: f64,
    what: &str,
) {
    assert_eq!(u.len(), v.len(), "{what}: row count");
    let mut best = (0usize, 0usize);
    let mut best_norm = -1.0f64;
    for (i, row) in u.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if x.norm() > best_norm {
                best_norm = x.norm();
                best = (i, j);
            }
        }
    }
    assert!(best_norm > tol, "{what}: zero matrix");
    let phase = v[best.0][best.1] / u[best.0][best.1];
    assert!(
        (phase.norm() - 1.0).abs() <= tol,
        "{what}: relating factor {phase} is not a phase"
    );
    for i in 0..u.len() {
        for j in 0..u[i].len() {
            let diff = (v[i][j] - u[i][j] * phase).norm();
            assert!(
                diff <= tol,
                "{what}: element ({i},{j}) differs by {diff:e} after phase alignment"
            );
        }
    }
}

/// Asserts two states are equal up to one global phase.
pub fn assert_state_phase_equal<T: Scalar>(a: &PureState<T>, b: &PureState<T>, tol: f64, what: &str) {
    let overlap = a.overlap_sq(b).unwrap().to_f64().unwrap();
    assert!(
        (overlap - 1.0).abs() <= tol,
        "{what}: |<a|b>|^2 = {overlap}, expected 1"
    );
}

/// Haar-ish random state: i.i.d. complex Gaussian-free amplitudes built from
/// uniforms, then normalized. Good enough for invariance checks.
pub fn random_state<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> PureState<f64> {
    let dim = 1usize << qubits;
    let amps: Vec<Complex<f64>> = (0..dim)
        .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    PureState::from_amplitudes(amps).expect("nonzero with probability 1")
}

/// Random circuit over the delegated-evaluation gate set
/// {X, Y, Z, H, S, Sdg, T, Tdg, CNOT, CZ}.
pub fn random_eval_circuit<R: Rng + ?Sized>(qubits: usize, ops: usize, rng: &mut R) -> Circuit {
    let mut circuit = Circuit::new(qubits);
    for _ in 0..ops {
        let q = rng.random_range(0..qubits);
        let op = match rng.random_range(0..10) {
            0 => GateOp::X(q),
            1 => GateOp::Y(q),
            2 => GateOp::Z(q),
            3 => GateOp::H(q),
            4 => GateOp::S(q),
            5 => GateOp::Sdg(q),
            6 => GateOp::T(q),
            7 => GateOp::Tdg(q),
            kind => {
                if qubits < 2 {
                    GateOp::H(q)
                } else {
                    let mut r = rng.random_range(0..qubits - 1);
                    if r >= q {
                        r += 1;
                    }
                    if kind == 8 {
                        GateOp::Cnot(q, r)
                    } else {
                        GateOp::Cz(q, r)
                    }
                }
            }
        };
        circuit.push(op);
    }
    circuit
}

/// Random circuit over the full gate vocabulary (minus Ry), including the
/// three-qubit gates when the register is wide enough.
pub fn random_full_circuit<R: Rng + ?Sized>(qubits: usize, ops: usize, rng: &mut R) -> Circuit {
    let mut circuit = Circuit::new(qubits);
    for _ in 0..ops {
        let choice = rng.random_range(0..13);
        if choice < 10 || qubits < 3 {
            let partial = random_eval_circuit(qubits, 1, rng);
            circuit.push(partial.ops[0].clone());
            continue;
        }
        let mut idx: Vec<usize> = (0..qubits).collect();
        for i in 0..3 {
            let j = rng.random_range(i..qubits);
            idx.swap(i, j);
        }
        let op = match choice {
            10 => GateOp::Swap(idx[0], idx[1]),
            11 => GateOp::Toffoli(idx[0], idx[1], idx[2]),
            _ => GateOp::Cswap(idx[0], idx[1], idx[2]),
        };
        circuit.push(op);
    }
    circuit
}
