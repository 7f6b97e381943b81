//! Similarity estimation between two quantum registers.
//!
//! One ancilla controls a register-wide swap between two r-qubit registers;
//! Hadamards on either side turn the ancilla's P(0) into
//! 1/2 + |<phi|psi>|^2 / 2. Register layout everywhere: qubit 0 is the
//! ancilla, qubits 1..=r hold the first state, r+1..=2r the second.

use crate::error::{Error, Result};
use crate::protocol::{run_delegated, SessionConfig, SessionOutcome};
use crate::qotp::{KeyPair, KeySet};
use crate::scalar::Scalar;
use crate::statevector::{Circuit, GateOp, PureState};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// The comparison circuit alone: H, one controlled swap per qubit pair, H.
pub fn swaptest_core(r: usize) -> Circuit {
    let mut circuit = Circuit::new(1 + 2 * r);
    circuit.push(GateOp::H(0));
    for i in 0..r {
        circuit.push(GateOp::Cswap(0, 1 + i, 1 + r + i));
    }
    circuit.push(GateOp::H(0));
    circuit
}

/// Full test circuit: both preparations embedded on their registers,
/// followed by the comparison core. The preparations must act on registers
/// of equal width.
pub fn build_swaptest(prep_a: &Circuit, prep_b: &Circuit) -> Result<Circuit> {
    if prep_a.qubits != prep_b.qubits {
        return Err(Error::QubitCountMismatch {
            expected: prep_a.qubits,
            actual: prep_b.qubits,
        });
    }
    let r = prep_a.qubits;
    let mut circuit = Circuit::new(1 + 2 * r);
    circuit.embed(prep_a, 1)?;
    circuit.embed(prep_b, 1 + r)?;
    circuit.extend(swaptest_core(r).ops);
    circuit.validate()?;
    Ok(circuit)
}

/// The ancilla law: P(0) = 1/2 + |<a|b>|^2 / 2, computed directly from the
/// two states without building the circuit.
pub fn analytic_p0<T: Scalar>(a: &PureState<T>, b: &PureState<T>) -> Result<T> {
    let half = T::from_f64_const(0.5);
    Ok(half + half * a.overlap_sq(b)?)
}

/// A similarity readout. `similarity` is 2 p0 - 1 clamped to [0, 1]:
/// sampling noise can push the raw value slightly negative, and a negative
/// squared overlap is meaningless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityEstimate {
    pub p0: f64,
    pub similarity: f64,
    pub shots: u64,
    /// Binomial standard error propagated to the similarity scale; zero for
    /// exact values.
    pub std_error: f64,
}

impl SimilarityEstimate {
    pub fn from_counts(zeros: u64, shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Empty("shot count"));
        }
        if zeros > shots {
            return Err(Error::input(format!(
                "{zeros} zero outcomes out of {shots} shots"
            )));
        }
        let p0 = zeros as f64 / shots as f64;
        Ok(SimilarityEstimate {
            p0,
            similarity: (2.0 * p0 - 1.0).clamp(0.0, 1.0),
            shots,
            std_error: 2.0 * (p0 * (1.0 - p0) / shots as f64).sqrt(),
        })
    }

    /// Wraps an analytically known P(0).
    pub fn exact(p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::InvalidProbability(p0));
        }
        Ok(SimilarityEstimate {
            p0,
            similarity: (2.0 * p0 - 1.0).clamp(0.0, 1.0),
            shots: 0,
            std_error: 0.0,
        })
    }
}

fn run_preps(prep_a: &Circuit, prep_b: &Circuit) -> Result<(PureState<f64>, f64)> {
    let circuit = build_swaptest(prep_a, prep_b)?;
    let mut state = PureState::<f64>::zero(circuit.qubits)?;
    state.run(&circuit)?;
    let p0 = state.outcome_probability(&[0], &[0])?;
    // Roundoff can leave the sum a few ulps outside [0, 1].
    Ok((state, p0.clamp(0.0, 1.0)))
}

/// Exact ancilla statistics from the full circuit.
pub fn similarity_analytic(prep_a: &Circuit, prep_b: &Circuit) -> Result<SimilarityEstimate> {
    let (_, p0) = run_preps(prep_a, prep_b)?;
    SimilarityEstimate::exact(p0)
}

/// Finite-shot estimate: Bernoulli draws against the exact ancilla P(0).
pub fn similarity_sampled<R: Rng + ?Sized>(
    prep_a: &Circuit,
    prep_b: &Circuit,
    shots: u64,
    rng: &mut R,
) -> Result<SimilarityEstimate> {
    if shots == 0 {
        return Err(Error::Empty("shot count"));
    }
    let (_, p0) = run_preps(prep_a, prep_b)?;
    let zeros = (0..shots).filter(|_| rng.random::<f64>() < p0).count() as u64;
    SimilarityEstimate::from_counts(zeros, shots)
}

/// An encrypted comparison run end to end through the delegation protocol.
#[derive(Debug, Clone)]
pub struct EncryptedSwapTest {
    pub estimate: SimilarityEstimate,
    /// Exact P(ancilla = 0) of the decrypted output distribution.
    pub analytic_p0: f64,
    pub session: SessionOutcome,
}

/// Runs the comparison under the pad. Both data registers are masked with
/// the same per-qubit keys: the ancilla law reads the overlap of whatever
/// the registers hold, so only equal masks make it the plaintext overlap.
/// The ancilla starts unmasked; its key still evolves through the ledger
/// and is undone at decryption like any other.
pub fn similarity_encrypted(
    prep_a: &Circuit,
    prep_b: &Circuit,
    register_keys: &KeySet,
    cfg: &SessionConfig,
) -> Result<EncryptedSwapTest> {
    if prep_a.qubits != prep_b.qubits {
        return Err(Error::QubitCountMismatch {
            expected: prep_a.qubits,
            actual: prep_b.qubits,
        });
    }
    let r = prep_a.qubits;
    if register_keys.len() != r {
        return Err(Error::KeyLength {
            expected: r,
            actual: register_keys.len(),
        });
    }

    // Client side: prepare the plaintext registers.
    let mut plain = PureState::<f64>::zero(1 + 2 * r)?;
    let mut prep = Circuit::new(1 + 2 * r);
    prep.embed(prep_a, 1)?;
    prep.embed(prep_b, 1 + r)?;
    plain.run(&prep)?;

    let mut pairs = vec![KeyPair::ZERO];
    pairs.extend(register_keys.pairs.iter().copied());
    pairs.extend(register_keys.pairs.iter().copied());
    let keys = KeySet::new(pairs);

    let session = run_delegated(&plain, &swaptest_core(r), &keys, cfg)?;
    let zeros = session.decrypted.bit_count(0, 0);
    let estimate = SimilarityEstimate::from_counts(zeros, session.decrypted.shots)?;
    let dist = session.decrypted_distribution();
    let analytic_p0 = dist
        .iter()
        .enumerate()
        .filter(|(i, _)| i >> (2 * r) == 0)
        .map(|(_, p)| p)
        .sum();
    Ok(EncryptedSwapTest {
        estimate,
        analytic_p0,
        session,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyledger::TGateMode;
    use crate::testutil::{assert_close, random_state};
    use num_complex::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prep_none(r: usize) -> Circuit {
        Circuit::new(r)
    }

    fn prep_x(r: usize) -> Circuit {
        Circuit::with_ops(r, (0..r).map(GateOp::X).collect())
    }

    #[test]
    fn core_circuit_shape() {
        let c = swaptest_core(2);
        assert_eq!(c.qubits, 5);
        assert_eq!(
            c.ops,
            vec![
                GateOp::H(0),
                GateOp::Cswap(0, 1, 3),
                GateOp::Cswap(0, 2, 4),
                GateOp::H(0),
            ]
        );
    }

    #[test]
    fn orthogonal_pair_lands_on_known_amplitudes() {
        // |1> against |0>: after the core the register is
        // (|001> + |010> - |101> + |110>) / 2. Frozen by hand.
        let circuit = build_swaptest(&prep_x(1), &prep_none(1)).unwrap();
        let mut state = PureState::<f64>::zero(3).unwrap();
        state.run(&circuit).unwrap();
        let expect = [
            (1u64, 0.5),
            (2, 0.5),
            (5, -0.5),
            (6, 0.5),
        ];
        for (idx, val) in expect {
            let amp = state.amplitude(idx);
            assert!(
                (amp - Complex::new(val, 0.0)).norm() < 1e-12,
                "index {idx}: {amp}"
            );
        }
        assert_close(
            state.outcome_probability(&[0], &[0]).unwrap(),
            0.5,
            1e-12,
            "ancilla p0",
        );
    }

    #[test]
    fn identical_states_read_similarity_one() {
        let prep = Circuit::with_ops(1, vec![GateOp::H(0)]);
        let est = similarity_analytic(&prep, &prep).unwrap();
        assert_close(est.p0, 1.0, 1e-12, "p0");
        assert_close(est.similarity, 1.0, 1e-12, "similarity");
        assert_eq!(est.shots, 0);
    }

    #[test]
    fn ancilla_law_matches_circuit_route() {
        // Dual route: the closed-form law against the full circuit, for
        // random state pairs carried in by exact amplitude injection.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let a = random_state(2, &mut rng);
            let b = random_state(2, &mut rng);
            let law = analytic_p0(&a, &b).unwrap();

            let joint = PureState::<f64>::zero(1)
                .unwrap()
                .tensor(&a)
                .unwrap()
                .tensor(&b)
                .unwrap();
            let mut state = joint;
            state.run(&swaptest_core(2)).unwrap();
            let p0 = state.outcome_probability(&[0], &[0]).unwrap();
            assert_close(p0, law, 1e-10, "law vs circuit");
        }
    }

    #[test]
    fn plus_against_zero_gives_three_quarters() {
        let plus = Circuit::with_ops(1, vec![GateOp::H(0)]);
        let est = similarity_analytic(&plus, &prep_none(1)).unwrap();
        assert_close(est.p0, 0.75, 1e-12, "p0");
        assert_close(est.similarity, 0.5, 1e-12, "similarity");
    }

    #[test]
    fn sampled_estimate_sits_within_three_sigma() {
        let plus = Circuit::with_ops(1, vec![GateOp::H(0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est = similarity_sampled(&plus, &prep_none(1), 8192, &mut rng).unwrap();
        let sigma = (0.75f64 * 0.25 / 8192.0).sqrt();
        assert!(
            (est.p0 - 0.75).abs() < 3.0 * sigma,
            "p0 {} strayed from 0.75",
            est.p0
        );
        assert!(est.std_error > 0.0);
        assert_eq!(est.shots, 8192);
    }

    #[test]
    fn estimate_clamps_similarity_at_zero() {
        let est = SimilarityEstimate::from_counts(4000, 8192).unwrap();
        assert!(est.p0 < 0.5);
        assert_eq!(est.similarity, 0.0);
        assert!(SimilarityEstimate::from_counts(10, 5).is_err());
        assert!(SimilarityEstimate::exact(1.5).is_err());
    }

    #[test]
    fn encrypted_run_matches_plain_law() {
        // Same-key masking must reproduce the plaintext overlap through the
        // whole delegation stack, in every T-gate mode.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..6u64 {
            let r = 1 + (trial as usize % 2);
            let prep_a = crate::testutil::random_eval_circuit(r, 6, &mut rng);
            let prep_b = crate::testutil::random_eval_circuit(r, 6, &mut rng);
            let keys = KeySet::random(r, &mut rng);
            let plain = similarity_analytic(&prep_a, &prep_b).unwrap();
            for mode in TGateMode::ALL {
                let cfg = SessionConfig {
                    mode,
                    shots: 256,
                    seed: trial * 7 + 3,
                };
                let run = similarity_encrypted(&prep_a, &prep_b, &keys, &cfg).unwrap();
                assert_close(
                    run.analytic_p0,
                    plain.p0,
                    1e-9,
                    &format!("trial {trial} mode {mode}"),
                );
            }
        }
    }

    #[test]
    fn encrypted_estimate_uses_decrypted_counts() {
        let keys = KeySet::from_bits(&[(1, 1)]).unwrap();
        let cfg = SessionConfig {
            mode: TGateMode::TrustedSameKey,
            shots: 4096,
            seed: 11,
        };
        let run = similarity_encrypted(&prep_x(1), &prep_x(1), &keys, &cfg).unwrap();
        // Identical plaintexts: every decrypted ancilla bit must be 0.
        assert_close(run.analytic_p0, 1.0, 1e-12, "analytic p0");
        assert_eq!(run.estimate.p0, 1.0);
        assert_eq!(run.estimate.shots, 4096);
        assert!(crate::protocol::audit(&run.session.transcript).is_clean());
    }

    #[test]
    fn mismatched_register_widths_are_rejected() {
        assert!(build_swaptest(&prep_none(1), &prep_none(2)).is_err());
        let keys = KeySet::trivial(2);
        let cfg = SessionConfig::default();
        assert!(similarity_encrypted(&prep_none(1), &prep_none(1), &keys, &cfg).is_err());
    }
}
