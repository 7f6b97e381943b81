//! Amplitude amplification and threshold-descent minimum finding.
//!
//! Index registers put qubit 0 on the most significant bit, matching the
//! rest of the crate. Multi-controlled phases on four or more qubits borrow
//! one extra work qubit, so those circuits are one qubit wider than the
//! index register; histograms are marginalized back down before anything is
//! reported.

use crate::error::{Error, Result};
use crate::keyledger::KeyLedger;
use crate::protocol::{run_delegated, SessionConfig, SessionOutcome};
use crate::qotp::{KeyPair, KeySet};
use crate::statevector::{
    bitstring, parse_bitstring, sample_shots, Circuit, GateOp, PureState, ShotHistogram,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest index register a value table may declare.
pub const MAX_INDEX_BITS: usize = 20;

/// A total function from m-bit indices to unsigned values, the classical
/// oracle input of minimum finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ValueTableWire", into = "ValueTableWire")]
pub struct ValueTable {
    index_bits: usize,
    values: Vec<u64>,
}

/// Wire form: values keyed by bitstring, optionally backfilled by
/// `default`, optionally bounded by `max_value`.
#[derive(Serialize, Deserialize)]
struct ValueTableWire {
    index_bits: usize,
    values: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_value: Option<u64>,
}

impl From<ValueTable> for ValueTableWire {
    fn from(t: ValueTable) -> Self {
        let values = t
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| (bitstring(i as u64, t.index_bits), v))
            .collect();
        ValueTableWire {
            index_bits: t.index_bits,
            values,
            default: None,
            max_value: None,
        }
    }
}

impl TryFrom<ValueTableWire> for ValueTable {
    type Error = Error;

    fn try_from(w: ValueTableWire) -> Result<ValueTable> {
        if w.index_bits == 0 || w.index_bits > MAX_INDEX_BITS {
            return Err(Error::input(format!(
                "index_bits must be in 1..={MAX_INDEX_BITS}, got {}",
                w.index_bits
            )));
        }
        let n = 1usize << w.index_bits;
        let mut values = vec![None; n];
        for (key, value) in &w.values {
            if key.len() != w.index_bits {
                return Err(Error::input(format!(
                    "table key \"{key}\" is not {} bits wide",
                    w.index_bits
                )));
            }
            let idx = parse_bitstring(key)? as usize;
            values[idx] = Some(*value);
        }
        let values: Vec<u64> = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.or(w.default)
                    .ok_or_else(|| Error::MissingTableIndex(bitstring(i as u64, w.index_bits)))
            })
            .collect::<Result<_>>()?;
        if let Some(max) = w.max_value {
            for (i, &v) in values.iter().enumerate() {
                if v > max {
                    return Err(Error::TableValueOverflow {
                        index: bitstring(i as u64, w.index_bits),
                        value: v,
                        max,
                    });
                }
            }
        }
        Ok(ValueTable {
            index_bits: w.index_bits,
            values,
        })
    }
}

impl ValueTable {
    /// Dense construction; the length fixes the index width.
    pub fn from_values(values: Vec<u64>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let index_bits = n.trailing_zeros() as usize;
        if index_bits > MAX_INDEX_BITS {
            return Err(Error::input(format!(
                "index_bits must be in 1..={MAX_INDEX_BITS}, got {index_bits}"
            )));
        }
        Ok(ValueTable { index_bits, values })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn index_bits(&self) -> usize {
        self.index_bits
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, index: usize) -> u64 {
        self.values[index]
    }

    /// Indices with value strictly below the threshold, ascending.
    pub fn marked_below(&self, threshold: u64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.values[i] < threshold)
            .collect()
    }

    pub fn min_entry(&self) -> (usize, u64) {
        let mut best = (0usize, self.values[0]);
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v < best.1 {
                best = (i, v);
            }
        }
        best
    }
}

/// Width of the circuit register serving an m-bit index: multi-controlled
/// phases over 4+ qubits need one borrowed work qubit.
pub fn circuit_qubits(index_bits: usize) -> usize {
    if index_bits >= 4 {
        index_bits + 1
    } else {
        index_bits
    }
}

/// Multi-controlled X over arbitrary many controls, using one borrowed
/// qubit. The borrowed qubit may hold any state; the identity
/// C^k X = W V W V with W = CCX(ck, borrow; t), V = C^(k-1) X(head; borrow)
/// flips the target exactly when all controls are set and restores the
/// borrow, so the expansion is exact as a unitary.
fn mcx_ops(controls: &[usize], target: usize, total: usize, ops: &mut Vec<GateOp>) {
    match *controls {
        [] => ops.push(GateOp::X(target)),
        [c] => ops.push(GateOp::Cnot(c, target)),
        [c1, c2] => ops.push(GateOp::Toffoli(c1, c2, target)),
        _ => {
            let k = controls.len();
            let borrow = (0..total)
                .find(|q| !controls.contains(q) && *q != target)
                .expect("register reserves a spare qubit for multi-control expansion");
            let (head, tail) = controls.split_at(k - 1);
            let last = tail[0];
            ops.push(GateOp::Toffoli(last, borrow, target));
            mcx_ops(head, borrow, total, ops);
            ops.push(GateOp::Toffoli(last, borrow, target));
            mcx_ops(head, borrow, total, ops);
        }
    }
}

/// Phase flip on |11...1> of the index register.
fn mcz_ops(index_bits: usize, total: usize) -> Vec<GateOp> {
    match index_bits {
        1 => vec![GateOp::Z(0)],
        2 => vec![GateOp::Cz(0, 1)],
        3 => vec![GateOp::H(2), GateOp::Toffoli(0, 1, 2), GateOp::H(2)],
        m => {
            let target = m - 1;
            let controls: Vec<usize> = (0..m - 1).collect();
            let mut ops = vec![GateOp::H(target)];
            mcx_ops(&controls, target, total, &mut ops);
            ops.push(GateOp::H(target));
            ops
        }
    }
}

fn normalize_marked(index_bits: usize, marked: &[usize]) -> Result<Vec<usize>> {
    if marked.is_empty() {
        return Err(Error::Empty("marked set"));
    }
    let n = 1usize << index_bits;
    let mut out: Vec<usize> = marked.to_vec();
    out.sort_unstable();
    out.dedup();
    if let Some(&bad) = out.iter().find(|&&i| i >= n) {
        return Err(Error::input(format!(
            "marked index {bad} out of range for {index_bits} index bits"
        )));
    }
    Ok(out)
}

/// Diagonal circuit sending |i> to -|i> exactly on the marked indices: each
/// marked string is rotated onto |11...1> by X gates, phase-flipped, and
/// rotated back.
pub fn build_phase_oracle(index_bits: usize, marked: &[usize]) -> Result<Circuit> {
    let marked = normalize_marked(index_bits, marked)?;
    let total = circuit_qubits(index_bits);
    let mut circuit = Circuit::new(total);
    for index in marked {
        let flips: Vec<GateOp> = (0..index_bits)
            .filter(|q| index >> (index_bits - 1 - q) & 1 == 0)
            .map(GateOp::X)
            .collect();
        circuit.extend(flips.clone());
        circuit.extend(mcz_ops(index_bits, total));
        circuit.extend(flips);
    }
    Ok(circuit)
}

/// Inversion about the uniform superposition of the index register, as
/// H X mcz X H; equals 2|s><s| - 1 up to global phase.
pub fn build_diffusion(index_bits: usize) -> Circuit {
    let total = circuit_qubits(index_bits);
    let mut circuit = Circuit::new(total);
    let wall = |c: &mut Circuit, gate: fn(usize) -> GateOp| {
        for q in 0..index_bits {
            c.push(gate(q));
        }
    };
    wall(&mut circuit, GateOp::H);
    wall(&mut circuit, GateOp::X);
    circuit.extend(mcz_ops(index_bits, total));
    wall(&mut circuit, GateOp::X);
    wall(&mut circuit, GateOp::H);
    circuit
}

/// Uniform preparation plus `iterations` rounds of oracle and diffusion.
pub fn grover_circuit(index_bits: usize, marked: &[usize], iterations: usize) -> Result<Circuit> {
    let oracle = build_phase_oracle(index_bits, marked)?;
    let diffusion = build_diffusion(index_bits);
    let mut circuit = Circuit::new(oracle.qubits);
    for q in 0..index_bits {
        circuit.push(GateOp::H(q));
    }
    for _ in 0..iterations {
        circuit.extend(oracle.ops.iter().cloned());
        circuit.extend(diffusion.ops.iter().cloned());
    }
    Ok(circuit)
}

/// Final state of the search circuit on |0...0>.
pub fn grover_state(index_bits: usize, marked: &[usize], iterations: usize) -> Result<PureState<f64>> {
    let circuit = grover_circuit(index_bits, marked, iterations)?;
    let mut state = PureState::zero(circuit.qubits)?;
    state.run(&circuit)?;
    Ok(state)
}

/// Index-register outcome distribution, borrowed qubit traced out.
pub fn register_probabilities(state: &PureState<f64>, index_bits: usize) -> Vec<f64> {
    let extra = state.qubits() - index_bits;
    let p = state.probabilities();
    let mut out = vec![0.0; 1 << index_bits];
    for (i, &pi) in p.iter().enumerate() {
        out[i >> extra] += pi;
    }
    out
}

fn reject_full_marking(index_bits: usize, marked: &[usize]) -> Result<Vec<usize>> {
    let marked = normalize_marked(index_bits, marked)?;
    if marked.len() == 1 << index_bits {
        return Err(Error::input(
            "every index is marked; amplification has nothing to separate",
        ));
    }
    Ok(marked)
}

/// Samples the search circuit and reports index-register counts.
pub fn grover_search<R: Rng + ?Sized>(
    index_bits: usize,
    marked: &[usize],
    iterations: usize,
    shots: u64,
    rng: &mut R,
) -> Result<ShotHistogram> {
    let marked = reject_full_marking(index_bits, marked)?;
    let state = grover_state(index_bits, &marked, iterations)?;
    let hist = sample_shots(&state, shots, rng);
    if state.qubits() > index_bits {
        hist.marginalize(&(0..index_bits).collect::<Vec<_>>())
    } else {
        Ok(hist)
    }
}

/// Hand-simplified one-iteration search on three qubits for the two
/// all-equal bitstrings. Pairwise CZs and a Z on every qubit realize the
/// {000, 111} phase oracle up to a global sign, so the only non-Clifford
/// block is the single Toffoli inside the diffusion: seven T-type gates
/// end to end, against twenty-one for the generic synthesis.
pub fn two_peak_demo_circuit() -> Circuit {
    let mut circuit = Circuit::new(3);
    for q in 0..3 {
        circuit.push(GateOp::H(q));
    }
    circuit.extend(two_peak_iteration().ops);
    circuit
}

/// The search round alone: oracle then diffusion, no preparation wall.
///
/// This is the circuit a client delegates when it prepares the uniform
/// superposition itself; key tracking therefore starts at the first CZ.
pub fn two_peak_iteration() -> Circuit {
    let mut circuit = Circuit::new(3);
    circuit
        .push(GateOp::Cz(0, 1))
        .push(GateOp::Cz(0, 2))
        .push(GateOp::Cz(1, 2));
    for q in 0..3 {
        circuit.push(GateOp::Z(q));
    }
    circuit.extend(build_diffusion(3).ops);
    circuit
}

/// Iteration count floor(pi/4 sqrt(N/M)), raised to at least one round.
pub fn optimal_iterations(n_items: usize, marked_count: usize) -> usize {
    unclamped_iterations(n_items, marked_count).max(1)
}

fn unclamped_iterations(n_items: usize, marked_count: usize) -> usize {
    let ratio = n_items as f64 / marked_count as f64;
    (std::f64::consts::FRAC_PI_4 * ratio.sqrt()).floor() as usize
}

/// Probability that measuring after j rounds hits a marked index:
/// sin^2((2j + 1) asin(sqrt(M/N))).
pub fn analytic_success_probability(n_items: usize, marked_count: usize, iterations: usize) -> f64 {
    let theta = (marked_count as f64 / n_items as f64).sqrt().asin();
    ((2 * iterations + 1) as f64 * theta).sin().powi(2)
}

/// One threshold-descent round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinRound {
    pub threshold: u64,
    pub marked_count: usize,
    pub iterations: usize,
    pub sampled_index: usize,
    pub sampled_value: u64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinResult {
    pub index: usize,
    pub value: u64,
    pub rounds: Vec<MinRound>,
    /// True when some round found nothing below the threshold, proving the
    /// threshold was already the minimum.
    pub early_terminated: bool,
}

impl MinResult {
    pub fn rounds_used(&self) -> usize {
        self.rounds.len()
    }
}

/// Search-round budget ceil(sqrt(N)) for an m-bit index.
pub fn default_budget(index_bits: usize) -> usize {
    ((1u64 << index_bits) as f64).sqrt().ceil() as usize
}

fn draw_one<R: Rng + ?Sized>(hist: &ShotHistogram, rng: &mut R) -> Result<u64> {
    if hist.shots == 0 {
        return Err(Error::Empty("histogram"));
    }
    let mut remaining = rng.random_range(0..hist.shots);
    for (outcome, &count) in &hist.counts {
        if remaining < count {
            return parse_bitstring(outcome);
        }
        remaining -= count;
    }
    Err(Error::input("histogram counts do not add up to shots"))
}

/// How a descent round picks its amplification count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IterationRule {
    /// Size the rotation from the marked-set cardinality, which is known
    /// here because the oracle is synthesized from the classical table.
    #[default]
    FromMarkedCount,
    /// Draw the count uniformly below ceil(sqrt(N)), the fallback for
    /// settings where the marked count would be unknown.
    Randomized,
}

/// Threshold descent: start at a random index, repeatedly amplitude-amplify
/// the strictly-better set and move the threshold onto any better sample.
/// Stops early when nothing lies below the threshold.
pub fn durr_hoyer_min<R: Rng + ?Sized>(
    table: &ValueTable,
    budget: usize,
    shots_per_round: u64,
    rng: &mut R,
) -> Result<MinResult> {
    durr_hoyer_min_with(table, budget, shots_per_round, IterationRule::default(), rng)
}

/// [`durr_hoyer_min`] with an explicit per-round iteration rule.
pub fn durr_hoyer_min_with<R: Rng + ?Sized>(
    table: &ValueTable,
    budget: usize,
    shots_per_round: u64,
    rule: IterationRule,
    rng: &mut R,
) -> Result<MinResult> {
    if shots_per_round == 0 {
        return Err(Error::Empty("shot count"));
    }
    let n = table.len();
    let mut index = rng.random_range(0..n);
    let mut value = table.get(index);
    let mut rounds = Vec::new();
    let mut early_terminated = false;
    for _ in 0..budget {
        let marked = table.marked_below(value);
        if marked.is_empty() {
            early_terminated = true;
            break;
        }
        let iterations = match rule {
            // Forcing a first iteration overshoots when most of the table
            // is marked: 6 of 8 rotates exactly onto the unmarked span and
            // the descent never moves. Wide sets sample the bare
            // superposition.
            IterationRule::FromMarkedCount => unclamped_iterations(n, marked.len()),
            IterationRule::Randomized => rng.random_range(0..default_budget(table.index_bits())),
        };
        let hist = grover_search(table.index_bits(), &marked, iterations, shots_per_round, rng)?;
        let sampled_index = draw_one(&hist, rng)? as usize;
        let sampled_value = table.get(sampled_index);
        let accepted = sampled_value < value;
        rounds.push(MinRound {
            threshold: value,
            marked_count: marked.len(),
            iterations,
            sampled_index,
            sampled_value,
            accepted,
        });
        if accepted {
            index = sampled_index;
            value = sampled_value;
        }
    }
    Ok(MinResult {
        index,
        value,
        rounds,
        early_terminated,
    })
}

/// A search run carried through the delegation protocol.
#[derive(Debug, Clone)]
pub struct GroverSession {
    /// The logical circuit the evaluator was asked to run.
    pub circuit: Circuit,
    pub session: SessionOutcome,
    /// Masked counts restricted to the index register.
    pub ciphertext_register: ShotHistogram,
    /// Unmasked counts restricted to the index register.
    pub decrypted_register: ShotHistogram,
}

impl GroverSession {
    pub fn ledger(&self) -> &KeyLedger {
        &self.session.ledger
    }
}

/// Runs the search under the pad. The client prepares the uniform
/// superposition itself (constant-depth local work), masks it with
/// `register_keys`, and delegates only the oracle-diffusion rounds; key
/// tracking therefore starts at the first oracle gate. Any borrowed work
/// qubit starts unmasked.
pub fn encrypted_grover(
    index_bits: usize,
    marked: &[usize],
    iterations: usize,
    register_keys: &KeySet,
    cfg: &SessionConfig,
) -> Result<GroverSession> {
    if register_keys.len() != index_bits {
        return Err(Error::KeyLength {
            expected: index_bits,
            actual: register_keys.len(),
        });
    }
    let marked = reject_full_marking(index_bits, marked)?;
    let oracle = build_phase_oracle(index_bits, &marked)?;
    let diffusion = build_diffusion(index_bits);
    let mut circuit = Circuit::new(oracle.qubits);
    for _ in 0..iterations {
        circuit.extend(oracle.ops.iter().cloned());
        circuit.extend(diffusion.ops.iter().cloned());
    }
    let mut pairs = register_keys.pairs.clone();
    pairs.resize(circuit.qubits, KeyPair::ZERO);
    let keys = KeySet::new(pairs);
    let mut prep = Circuit::new(circuit.qubits);
    for q in 0..index_bits {
        prep.push(GateOp::H(q));
    }
    let mut plain = PureState::<f64>::zero(circuit.qubits)?;
    plain.run(&prep)?;
    let session = run_delegated(&plain, &circuit, &keys, cfg)?;
    let register: Vec<usize> = (0..index_bits).collect();
    let ciphertext_register = session.ciphertext.marginalize(&register)?;
    let decrypted_register = session.decrypted.marginalize(&register)?;
    Ok(GroverSession {
        circuit,
        session,
        ciphertext_register,
        decrypted_register,
    })
}
