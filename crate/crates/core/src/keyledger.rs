//! Pauli key tracking through Clifford+T circuits.
//!
//! Conjugating a one-time-pad mask X^a Z^b through a Clifford gate yields
//! another Pauli mask, so the evaluator can run Clifford gates directly on
//! ciphertext while the key holder updates (a, b) classically. T gates break
//! this: pushing T through X leaves an S residue, handled per [`TGateMode`].
//!
//! [`rule_update`] is the closed-form table; [`derive_rule`] recomputes any
//! single rule by brute-force matrix search so the table can be checked
//! against first principles.

use crate::error::{Error, Result};
use crate::qotp::{mask_ops, KeyPair, KeySet};
use crate::statevector::{circuit_unitary, Circuit, GateOp};
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

/// How T and Tdg gates are reconciled with the pad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TGateMode {
    /// The trusted party unmasks the qubit, applies the gate, and re-masks
    /// with a freshly drawn pair.
    #[default]
    #[serde(rename = "fresh")]
    TrustedFreshKey,
    /// Like fresh, but the original pair is reused. Deterministic, which
    /// keeps ledgers reproducible; weaker as cryptography.
    #[serde(rename = "same-key")]
    TrustedSameKey,
    /// No unmasking. The gate is applied through the pad and the S residue
    /// from T X = w S X T is cancelled by an S^a (or S^-a for Tdg)
    /// correction, after which the pad is again purely Pauli.
    #[serde(rename = "algebraic")]
    Algebraic,
}

impl TGateMode {
    pub const ALL: [TGateMode; 3] = [
        TGateMode::TrustedFreshKey,
        TGateMode::TrustedSameKey,
        TGateMode::Algebraic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TGateMode::TrustedFreshKey => "fresh",
            TGateMode::TrustedSameKey => "same-key",
            TGateMode::Algebraic => "algebraic",
        }
    }
}

impl fmt::Display for TGateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TGateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresh" => Ok(TGateMode::TrustedFreshKey),
            "same-key" | "same_key" => Ok(TGateMode::TrustedSameKey),
            "algebraic" => Ok(TGateMode::Algebraic),
            other => Err(Error::input(format!(
                "unknown T-gate mode \"{other}\", expected fresh, same-key, or algebraic"
            ))),
        }
    }
}

/// Key state after one circuit step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub gate: String,
    /// 1 when this step applied an S-type correction (algebraic T with a=1).
    pub s_correction: u8,
    pub keys: KeySet,
}

/// Full key history for one circuit run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyLedger {
    pub mode: TGateMode,
    pub initial: KeySet,
    pub entries: Vec<LedgerEntry>,
}

impl KeyLedger {
    pub fn final_keys(&self) -> &KeySet {
        self.entries.last().map(|e| &e.keys).unwrap_or(&self.initial)
    }

    /// Total S-type corrections, one per algebraic T step that hit a=1.
    pub fn correction_count(&self) -> usize {
        self.entries.iter().filter(|e| e.s_correction == 1).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV with one row per step; step 0 holds the initial keys.
    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let qubits = self.initial.len();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string(), "gate".to_string(), "s".to_string()];
        for q in 0..qubits {
            header.push(format!("q{q}_a"));
            header.push(format!("q{q}_b"));
        }
        w.write_record(&header)?;
        let row = |step: usize, gate: &str, s: u8, keys: &KeySet| {
            let mut rec = vec![step.to_string(), gate.to_string(), s.to_string()];
            for pair in &keys.pairs {
                rec.push(pair.a.to_string());
                rec.push(pair.b.to_string());
            }
            rec
        };
        w.write_record(row(0, "init", 0, &self.initial))?;
        for e in &self.entries {
            w.write_record(row(e.step, &e.gate, e.s_correction, &e.keys))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Key update for one Clifford gate. T/Tdg and the composite gates are
/// rejected; run those through [`step_update`] or decompose first.
pub fn rule_update(op: &GateOp, keys: &KeySet) -> Result<KeySet> {
    let mut pairs = keys.pairs.clone();
    let at = |pairs: &[KeyPair], q: usize| -> Result<KeyPair> {
        pairs
            .get(q)
            .copied()
            .ok_or(Error::QubitOutOfRange {
                index: q,
                qubits: pairs.len(),
            })
    };
    match *op {
        GateOp::I(_) | GateOp::X(_) | GateOp::Y(_) | GateOp::Z(_) => {}
        GateOp::H(q) => {
            let k = at(&pairs, q)?;
            pairs[q] = KeyPair { a: k.b, b: k.a };
        }
        GateOp::S(q) | GateOp::Sdg(q) => {
            let k = at(&pairs, q)?;
            pairs[q] = KeyPair { a: k.a, b: k.a ^ k.b };
        }
        GateOp::Cnot(control, target) => {
            let c = at(&pairs, control)?;
            let t = at(&pairs, target)?;
            pairs[control] = KeyPair { a: c.a, b: c.b ^ t.b };
            pairs[target] = KeyPair { a: c.a ^ t.a, b: t.b };
        }
        GateOp::Cz(m, l) => {
            let km = at(&pairs, m)?;
            let kl = at(&pairs, l)?;
            pairs[m] = KeyPair { a: km.a, b: km.b ^ kl.a };
            pairs[l] = KeyPair { a: kl.a, b: kl.b ^ km.a };
        }
        GateOp::Swap(m, l) => {
            let _ = at(&pairs, m)?;
            let _ = at(&pairs, l)?;
            pairs.swap(m, l);
        }
        ref other => return Err(Error::NonClifford(other.label())),
    }
    Ok(KeySet::new(pairs))
}

/// Outcome of resolving one T or Tdg step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TAssist {
    pub new_pair: KeyPair,
    /// 1 when an S^(+/-1) correction must be applied on the masked qubit.
    pub s_correction: u8,
}

/// Key-side resolution of a T or Tdg gate on a qubit holding `pair`.
pub fn t_key_update<R: Rng + ?Sized>(mode: TGateMode, pair: KeyPair, rng: &mut R) -> TAssist {
    match mode {
        TGateMode::TrustedFreshKey => TAssist {
            new_pair: KeyPair {
                a: rng.random_range(0..2u8),
                b: rng.random_range(0..2u8),
            },
            s_correction: 0,
        },
        TGateMode::TrustedSameKey => TAssist {
            new_pair: pair,
            s_correction: 0,
        },
        TGateMode::Algebraic => TAssist {
            new_pair: KeyPair {
                a: pair.a,
                b: pair.a ^ pair.b,
            },
            s_correction: pair.a,
        },
    }
}

/// The gates the trusted party applies to the shared register to resolve a
/// T-type step, per mode. For fresh and same-key this is unmask / gate /
/// re-mask; for algebraic it is the gate followed by its S-type correction.
pub fn t_assist_ops(
    op: &GateOp,
    qubit: usize,
    pair: KeyPair,
    assist: TAssist,
    mode: TGateMode,
) -> Result<Vec<GateOp>> {
    let dagger = match op {
        GateOp::T(_) => false,
        GateOp::Tdg(_) => true,
        other => {
            return Err(Error::input(format!(
                "t_assist_ops expects T or Tdg, got {}",
                other.label()
            )))
        }
    };
    let gate = if dagger { GateOp::Tdg(qubit) } else { GateOp::T(qubit) };
    let mut ops = Vec::new();
    match mode {
        TGateMode::TrustedFreshKey | TGateMode::TrustedSameKey => {
            ops.extend(mask_ops(qubit, pair));
            ops.push(gate);
            ops.extend(mask_ops(qubit, assist.new_pair));
        }
        TGateMode::Algebraic => {
            ops.push(gate);
            if assist.s_correction == 1 {
                ops.push(if dagger { GateOp::Sdg(qubit) } else { GateOp::S(qubit) });
            }
        }
    }
    Ok(ops)
}

/// Key update for one Clifford+T step; T-type gates consult `mode` and may
/// draw fresh bits from `rng`.
pub fn step_update<R: Rng + ?Sized>(
    op: &GateOp,
    keys: &KeySet,
    mode: TGateMode,
    rng: &mut R,
) -> Result<(KeySet, u8)> {
    match *op {
        GateOp::T(q) | GateOp::Tdg(q) => {
            let pair = keys
                .pairs
                .get(q)
                .copied()
                .ok_or(Error::QubitOutOfRange {
                    index: q,
                    qubits: keys.len(),
                })?;
            let assist = t_key_update(mode, pair, rng);
            let mut pairs = keys.pairs.clone();
            pairs[q] = assist.new_pair;
            Ok((KeySet::new(pairs), assist.s_correction))
        }
        _ => Ok((rule_update(op, keys)?, 0)),
    }
}

/// Tracks keys through a whole circuit. The circuit must already be in the
/// Clifford+T gate set; composite gates and rotations are rejected.
pub fn run_ledger<R: Rng + ?Sized>(
    circuit: &Circuit,
    initial: &KeySet,
    mode: TGateMode,
    rng: &mut R,
) -> Result<KeyLedger> {
    if initial.len() != circuit.qubits {
        return Err(Error::KeyLength {
            expected: circuit.qubits,
            actual: initial.len(),
        });
    }
    circuit.validate()?;
    let mut keys = initial.clone();
    let mut entries = Vec::with_capacity(circuit.ops.len());
    for (i, op) in circuit.ops.iter().enumerate() {
        let (next, s) = step_update(op, &keys, mode, rng)?;
        keys = next;
        entries.push(LedgerEntry {
            step: i + 1,
            gate: op.label(),
            s_correction: s,
            keys: keys.clone(),
        });
    }
    Ok(KeyLedger {
        mode,
        initial: initial.clone(),
        entries,
    })
}

type Matrix = Vec<Vec<Complex<f64>>>;

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![Complex::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn pauli_matrix(pairs: &[KeyPair]) -> Result<Matrix> {
    let mut circuit = Circuit::new(pairs.len());
    for (q, &pair) in pairs.iter().enumerate() {
        circuit.extend(mask_ops(q, pair));
    }
    circuit_unitary::<f64>(&circuit)
}

/// True when a = phase * b for some unit-modulus phase.
fn proportional(a: &Matrix, b: &Matrix, tol: f64) -> bool {
    let n = a.len();
    let mut anchor = None;
    let mut best = 0.0;
    for i in 0..n {
        for j in 0..n {
            let m = b[i][j].norm();
            if m > best {
                best = m;
                anchor = Some((i, j));
            }
        }
    }
    let Some((i, j)) = anchor else { return false };
    let phase = a[i][j] / b[i][j];
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    for i in 0..n {
        for j in 0..n {
            if (a[i][j] - phase * b[i][j]).norm() > tol {
                return false;
            }
        }
    }
    true
}

fn decode_pairs(index: usize, qubits: usize) -> Vec<KeyPair> {
    (0..qubits)
        .map(|q| KeyPair {
            a: ((index >> (2 * q)) & 1) as u8,
            b: ((index >> (2 * q + 1)) & 1) as u8,
        })
        .collect()
}

/// Rediscovers the key-update rule for a 1- or 2-qubit gate by searching,
/// for every input mask P, for the output mask P' with G P = phase P' G.
/// Phases are allowed to be any unit complex, since e.g. S X = i X Z S.
/// Returns the full input -> output mapping over canonical qubit positions.
pub fn derive_rule(op: &GateOp) -> Result<Vec<(Vec<KeyPair>, Vec<KeyPair>)>> {
    let arity = op.arity();
    if arity > 2 {
        return Err(Error::input(format!(
            "rule derivation covers 1- and 2-qubit gates, got {}",
            op.label()
        )));
    }
    let targets = op.targets();
    let canonical = op.relabeled(|q| targets.iter().position(|&t| t == q).unwrap());
    let g = circuit_unitary::<f64>(&Circuit::with_ops(arity, vec![canonical.clone()]))?;
    let count = 1usize << (2 * arity);
    let mut mapping = Vec::with_capacity(count);
    for input in 0..count {
        let pairs = decode_pairs(input, arity);
        let lhs = matmul(&g, &pauli_matrix(&pairs)?);
        let mut found = None;
        for output in 0..count {
            let cand = decode_pairs(output, arity);
            let rhs = matmul(&pauli_matrix(&cand)?, &g);
            if proportional(&lhs, &rhs, 1e-9) {
                found = Some(cand);
                break;
            }
        }
        let Some(out) = found else {
            return Err(Error::NonClifford(canonical.label()));
        };
        mapping.push((pairs, out));
    }
    Ok(mapping)
}
