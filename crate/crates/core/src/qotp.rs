//! Quantum one-time pad: per-qubit Pauli masking.
//!
//! A key pair (a, b) masks one qubit with the composite operator X^a Z^b,
//! realized as "apply Z^b, then X^a". Applying the same composite again
//! undoes it up to the global phase (-1)^{ab}, so encryption and decryption
//! share one code path. On computational-basis measurements only the a bits
//! matter, which gives the histogram-level decryption used by the protocol
//! layer.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::statevector::{GateOp, PureState, ShotHistogram};
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One qubit's mask exponents; both bits are 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "(u8, u8)", into = "(u8, u8)")]
pub struct KeyPair {
    pub a: u8,
    pub b: u8,
}

impl KeyPair {
    pub fn new(a: u8, b: u8) -> Result<Self> {
        if a > 1 || b > 1 {
            return Err(Error::KeyBitRange { a, b });
        }
        Ok(KeyPair { a, b })
    }

    pub const ZERO: KeyPair = KeyPair { a: 0, b: 0 };
}

impl From<KeyPair> for (u8, u8) {
    fn from(k: KeyPair) -> Self {
        (k.a, k.b)
    }
}

impl TryFrom<(u8, u8)> for KeyPair {
    type Error = Error;
    fn try_from((a, b): (u8, u8)) -> Result<Self> {
        KeyPair::new(a, b)
    }
}

/// Per-qubit key pairs for a whole register, qubit 0 first.
///
/// Serializes as `{"pairs": [[1,1],[0,1],[0,1]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySet {
    pub pairs: Vec<KeyPair>,
}

impl KeySet {
    pub fn new(pairs: Vec<KeyPair>) -> Self {
        KeySet { pairs }
    }

    /// Builds a key set from raw bit tuples.
    pub fn from_bits(bits: &[(u8, u8)]) -> Result<Self> {
        let pairs = bits
            .iter()
            .map(|&(a, b)| KeyPair::new(a, b))
            .collect::<Result<_>>()?;
        Ok(KeySet { pairs })
    }

    /// Uniformly random pairs for `qubits` qubits.
    pub fn random<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Self {
        let pairs = (0..qubits)
            .map(|_| KeyPair {
                a: rng.random_range(0..2u8),
                b: rng.random_range(0..2u8),
            })
            .collect();
        KeySet { pairs }
    }

    /// All-zero (identity) mask.
    pub fn trivial(qubits: usize) -> Self {
        KeySet {
            pairs: vec![KeyPair::ZERO; qubits],
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, qubit: usize) -> KeyPair {
        self.pairs[qubit]
    }

    /// The a (X-mask) bits, qubit 0 first.
    pub fn a_bits(&self) -> Vec<u8> {
        self.pairs.iter().map(|p| p.a).collect()
    }

    /// The b (Z-mask) bits, qubit 0 first.
    pub fn b_bits(&self) -> Vec<u8> {
        self.pairs.iter().map(|p| p.b).collect()
    }

    fn check_len(&self, qubits: usize) -> Result<()> {
        if self.len() != qubits {
            return Err(Error::KeyLength {
                expected: qubits,
                actual: self.len(),
            });
        }
        Ok(())
    }

    /// Parses the inline CLI syntax `{1,1},{0,1},{0,1}`.
    pub fn parse_inline(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Empty("key string"));
        }
        let mut pairs = Vec::new();
        let mut rest = compact.as_str();
        loop {
            let body = rest
                .strip_prefix('{')
                .ok_or_else(|| Error::input(format!("expected '{{' in key string at \"{rest}\"")))?;
            let (pair, tail) = body
                .split_once('}')
                .ok_or_else(|| Error::input("unterminated key pair, missing '}'"))?;
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| Error::input(format!("key pair \"{pair}\" is not of form a,b")))?;
            let parse_bit = |t: &str| -> Result<u8> {
                t.parse::<u8>()
                    .map_err(|_| Error::input(format!("key bit \"{t}\" is not an integer")))
            };
            pairs.push(KeyPair::new(parse_bit(a)?, parse_bit(b)?)?);
            if tail.is_empty() {
                break;
            }
            rest = tail
                .strip_prefix(',')
                .ok_or_else(|| Error::input("key pairs must be separated by ','"))?;
        }
        Ok(KeySet { pairs })
    }
}

/// The gate sequence realizing one qubit's mask: Z^b then X^a.
pub fn mask_ops(qubit: usize, pair: KeyPair) -> Vec<GateOp> {
    let mut ops = Vec::new();
    if pair.b == 1 {
        ops.push(GateOp::Z(qubit));
    }
    if pair.a == 1 {
        ops.push(GateOp::X(qubit));
    }
    ops
}

/// Masks every qubit of `state` with its key pair.
pub fn encrypt<T: Scalar>(state: &mut PureState<T>, keys: &KeySet) -> Result<()> {
    keys.check_len(state.qubits())?;
    for (q, &pair) in keys.pairs.iter().enumerate() {
        for op in mask_ops(q, pair) {
            state.apply(&op)?;
        }
    }
    Ok(())
}

/// Unmasks `state`; identical to [`encrypt`] because X^a Z^b squares to
/// (-1)^{ab} times the identity, and that global phase is unobservable.
pub fn decrypt<T: Scalar>(state: &mut PureState<T>, keys: &KeySet) -> Result<()> {
    encrypt(state, keys)
}

/// Decrypts computational-basis outcomes by XOR-ing each bitstring with the
/// a bits; Z masks never show up in this basis.
pub fn decrypt_histogram(hist: &ShotHistogram, keys: &KeySet) -> Result<ShotHistogram> {
    let a = keys.a_bits();
    let mut out = ShotHistogram::new();
    for (key, &count) in &hist.counts {
        if key.len() != a.len() {
            return Err(Error::KeyLength {
                expected: key.len(),
                actual: a.len(),
            });
        }
        let decrypted: String = key
            .bytes()
            .zip(&a)
            .map(|(bit, &mask)| {
                let v = (bit - b'0') ^ mask;
                (v + b'0') as char
            })
            .collect();
        *out.counts.entry(decrypted).or_insert(0) += count;
    }
    out.shots = hist.shots;
    Ok(out)
}

/// Density matrix of the ciphertext averaged over all 4^n keys. For any
/// plaintext this equals I / 2^n: a uniformly keyed pad reveals nothing.
/// Exponential in n, so the register is capped at 3 qubits.
pub fn key_average_density<T: Scalar>(plaintext: &PureState<T>) -> Result<Vec<Vec<Complex<T>>>> {
    let n = plaintext.qubits();
    if n > 3 {
        return Err(Error::input(format!(
            "key averaging is capped at 3 qubits, got {n}"
        )));
    }
    let dim = plaintext.dim();
    let mut rho = vec![vec![Complex::new(T::zero(), T::zero()); dim]; dim];
    let key_count = 1u64 << (2 * n);
    let weight = T::from_f64_const(1.0 / key_count as f64);
    for key_index in 0..key_count {
        let pairs: Vec<KeyPair> = (0..n)
            .map(|q| KeyPair {
                a: ((key_index >> (2 * q)) & 1) as u8,
                b: ((key_index >> (2 * q + 1)) & 1) as u8,
            })
            .collect();
        let mut cipher = plaintext.clone();
        encrypt(&mut cipher, &KeySet::new(pairs))?;
        let amps = cipher.amplitudes();
        for i in 0..dim {
            for j in 0..dim {
                rho[i][j] += (amps[i] * amps[j].conj()).scale(weight);
            }
        }
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{sample_shots, Circuit};
    use crate::testutil::{assert_state_phase_equal, random_state};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mask_applies_z_then_x() {
        // On |0>: Z does nothing, X flips, so (1,1) sends |0> to |1>.
        let mut state = PureState::<f64>::zero(1).unwrap();
        encrypt(&mut state, &KeySet::from_bits(&[(1, 1)]).unwrap()).unwrap();
        assert!((state.amplitude(1) - num_complex::Complex::new(1.0, 0.0)).norm() < 1e-15);
        // On |1>: Z negates first, then X moves the amplitude to |0>.
        let mut one = PureState::<f64>::basis(1, 1).unwrap();
        encrypt(&mut one, &KeySet::from_bits(&[(1, 1)]).unwrap()).unwrap();
        assert!((one.amplitude(0) - num_complex::Complex::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn key_length_must_match_register() {
        let mut state = PureState::<f64>::zero(2).unwrap();
        let keys = KeySet::from_bits(&[(1, 0)]).unwrap();
        assert!(matches!(
            encrypt(&mut state, &keys),
            Err(Error::KeyLength { .. })
        ));
    }

    proptest! {
        #[test]
        fn encrypt_then_decrypt_restores_state(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let qubits = 1 + (seed as usize % 3);
            let state = random_state(qubits, &mut rng);
            let keys = KeySet::random(qubits, &mut rng);
            let mut worked = state.clone();
            encrypt(&mut worked, &keys).unwrap();
            decrypt(&mut worked, &keys).unwrap();
            assert_state_phase_equal(&state, &worked, 1e-12, "pad round trip");
        }
    }

    #[test]
    fn ciphertext_differs_unless_key_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let state = random_state(2, &mut rng);
        for key_index in 1u8..16 {
            let keys = KeySet::from_bits(&[
                (key_index & 1, (key_index >> 1) & 1),
                ((key_index >> 2) & 1, (key_index >> 3) & 1),
            ])
            .unwrap();
            let mut cipher = state.clone();
            encrypt(&mut cipher, &keys).unwrap();
            let overlap = state.overlap_sq(&cipher).unwrap();
            assert!(
                overlap < 1.0 - 1e-9,
                "mask {keys:?} left a generic state fixed (overlap {overlap})"
            );
        }
    }

    #[test]
    fn histogram_decrypt_xors_a_bits() {
        let mut hist = ShotHistogram::new();
        hist.counts.insert("00".into(), 700);
        hist.counts.insert("11".into(), 324);
        hist.shots = 1024;
        let keys = KeySet::from_bits(&[(1, 0), (0, 1)]).unwrap();
        let plain = decrypt_histogram(&hist, &keys).unwrap();
        assert_eq!(plain.count("10"), 700);
        assert_eq!(plain.count("01"), 324);
        assert_eq!(plain.shots, 1024);
    }

    #[test]
    fn histogram_decrypt_matches_state_decrypt() {
        // Dual route: the X mask permutes basis indices, so the ciphertext
        // probability at index i must equal the plaintext probability at
        // i xor (a-bit pattern). Exact, no sampling involved.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let state = random_state(3, &mut rng);
        let keys = KeySet::from_bits(&[(1, 0), (0, 1), (1, 1)]).unwrap();
        let mut cipher = state.clone();
        encrypt(&mut cipher, &keys).unwrap();

        let n = state.qubits();
        let mask: usize = keys
            .a_bits()
            .iter()
            .enumerate()
            .map(|(q, &a)| (a as usize) << (n - 1 - q))
            .sum();
        let p_cipher = cipher.probabilities();
        let p_plain = state.probabilities();
        for i in 0..p_cipher.len() {
            assert!(
                (p_cipher[i] - p_plain[i ^ mask]).abs() < 1e-12,
                "index {i} mask {mask}"
            );
        }

        // And the histogram route applies exactly that permutation.
        let mut sample_rng = ChaCha8Rng::seed_from_u64(77);
        let cipher_hist = sample_shots(&cipher, 4096, &mut sample_rng);
        let decrypted = decrypt_histogram(&cipher_hist, &keys).unwrap();
        for (outcome, &count) in &cipher_hist.counts {
            let idx = crate::statevector::parse_bitstring(outcome).unwrap() as usize;
            let plain_key = crate::statevector::bitstring((idx ^ mask) as u64, n);
            assert_eq!(decrypted.count(&plain_key), count, "outcome {outcome}");
        }
    }

    #[test]
    fn averaging_over_all_keys_gives_maximally_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for qubits in 1..=2usize {
            let state = random_state(qubits, &mut rng);
            let rho = key_average_density(&state).unwrap();
            let dim = 1usize << qubits;
            for (i, row) in rho.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    let expected = if i == j { 1.0 / dim as f64 } else { 0.0 };
                    assert!(
                        (x - num_complex::Complex::new(expected, 0.0)).norm() < 1e-10,
                        "rho[{i}][{j}] = {x} for {qubits} qubits"
                    );
                }
            }
        }
    }

    #[test]
    fn keyset_json_shape() {
        let keys = KeySet::from_bits(&[(1, 1), (0, 1)]).unwrap();
        let json = serde_json::to_string(&keys).unwrap();
        assert_eq!(json, r#"{"pairs":[[1,1],[0,1]]}"#);
        let back: KeySet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, keys);
        assert!(serde_json::from_str::<KeySet>(r#"{"pairs":[[2,0]]}"#).is_err());
    }

    #[test]
    fn keyset_inline_syntax() {
        let keys = KeySet::parse_inline("{1,1},{0,1},{0,1}").unwrap();
        assert_eq!(keys.a_bits(), vec![1, 0, 0]);
        assert_eq!(keys.b_bits(), vec![1, 1, 1]);
        assert_eq!(KeySet::parse_inline(" {1,0} ").unwrap().len(), 1);
        assert!(KeySet::parse_inline("{1,1},{0,2}").is_err());
        assert!(KeySet::parse_inline("{1,1").is_err());
        assert!(KeySet::parse_inline("1,1").is_err());
    }

    #[test]
    fn mask_ops_order_is_z_then_x() {
        let ops = mask_ops(2, KeyPair::new(1, 1).unwrap());
        assert_eq!(ops, vec![GateOp::Z(2), GateOp::X(2)]);
        assert!(mask_ops(0, KeyPair::ZERO).is_empty());
    }

    #[test]
    fn random_keysets_cover_all_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..200 {
            let k = KeySet::random(1, &mut rng);
            seen.insert((k.pairs[0].a, k.pairs[0].b));
        }
        assert_eq!(seen.len(), 4, "all four pairs should appear");
    }

    #[test]
    fn encryption_acts_per_qubit() {
        // Masking qubit 1 of a product state leaves qubit 0's marginal alone.
        let mut state = PureState::<f64>::zero(2).unwrap();
        state.apply(&GateOp::H(0)).unwrap();
        let keys = KeySet::from_bits(&[(0, 0), (1, 0)]).unwrap();
        encrypt(&mut state, &keys).unwrap();
        let p = state.outcome_probability(&[0], &[0]).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let p1 = state.outcome_probability(&[1], &[1]).unwrap();
        assert!((p1 - 1.0).abs() < 1e-12);
        let _ = Circuit::new(2);
    }
}
