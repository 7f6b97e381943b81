//! Desk-scale simulator of delegated quantum computation under a quantum
//! one-time pad (QOTP).
//!
//! A client Pauli-masks a small quantum register and hands it to an untrusted
//! evaluator. Clifford gates commute through the mask and only rewrite the
//! classical key; each T gate is delegated to a trusted key-holding party.
//! On top of that substrate the crate builds the three experiments the CLI
//! exposes: SwapTest similarity estimation, Grover search with threshold-based
//! minimum finding, and a k-means clustering pipeline whose distance oracle
//! and argmin run through the quantum path.
//!
//! The simulator core ([`statevector`], [`qotp`]) is generic over the scalar
//! type via [`Scalar`]; `f64` is the default everywhere and [`PureState32`] /
//! [`PureState64`] name the two concrete instantiations. Qubit 0 is the most
//! significant bit of a basis index, so the printed bitstring `"100"` means
//! qubit 0 is 1 and corresponds to index 4 on three qubits.

pub mod error;
pub mod groveropt;
pub mod keyledger;
pub mod kmeans;
pub mod protocol;
pub mod qotp;
pub mod scalar;
pub mod statevector;
pub mod swaptest;

pub mod cli;

#[cfg(test)]
pub(crate) mod testutil;

/// Keeps the README's code example compiling and passing.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub struct ReadmeDoctests;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use statevector::{Circuit, GateOp, PureState, ShotHistogram};

/// State vector over single-precision amplitudes.
pub type PureState32 = statevector::PureState<f32>;
/// State vector over double-precision amplitudes, the default.
pub type PureState64 = statevector::PureState<f64>;

/// Default ceiling on register width; 2^20 amplitudes is the largest
/// register the dense simulator will allocate unless overridden.
pub const DEFAULT_QUBIT_CAP: usize = 20;

/// Environment variable that overrides [`DEFAULT_QUBIT_CAP`].
pub const QUBIT_CAP_ENV: &str = "QCLOUDSIM_QUBIT_CAP";

/// Current register-width ceiling. Read once per process.
pub fn qubit_cap() -> usize {
    use std::sync::OnceLock;
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(QUBIT_CAP_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_QUBIT_CAP)
    })
}
