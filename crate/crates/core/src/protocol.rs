//! Three-party delegated evaluation sessions.
//!
//! The client owns the plaintext and the pad keys, the evaluator runs the
//! circuit on ciphertext, and the trusted party holds the keys and resolves
//! T-type steps. Every classical exchange is recorded as a [`Message`] in a
//! [`Transcript`], which can be audited after the fact and filtered down to
//! what the evaluator was allowed to see.
//!
//! The scheduler is sequential and deterministic: given the same inputs and
//! seed, a session produces byte-identical transcripts and histograms.

use crate::error::{Error, Result};
use crate::keyledger::{rule_update, t_assist_ops, t_key_update, KeyLedger, LedgerEntry, TGateMode};
use crate::qotp::{decrypt_histogram, encrypt, KeySet};
use crate::statevector::{sample_shots, Circuit, GateOp, PureState, ShotHistogram};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Client,
    Evaluator,
    Trusted,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Client => "client",
            Party::Evaluator => "evaluator",
            Party::Trusted => "trusted",
        })
    }
}

/// Classical message bodies. Quantum registers move out of band; the
/// transcript records who asked whom for what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// Client hands the evaluator the public circuit for the uploaded
    /// ciphertext register.
    CiphertextUpload { qubits: usize, circuit: Circuit },
    /// Client deposits the pad keys with the trusted party.
    KeyDeposit { keys: KeySet },
    /// Evaluator asks for help with the T-type gate at `step`.
    TAssistRequest { step: usize, qubit: usize },
    /// Trusted party reports the step resolved.
    TAssistDone { step: usize },
    /// Evaluator returns measured ciphertext counts.
    EvalResult { histogram: ShotHistogram },
    /// Trusted party releases the final keys so the client can decrypt.
    FinalKeyDelivery { keys: KeySet },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::CiphertextUpload { .. } => "ciphertext_upload",
            Payload::KeyDeposit { .. } => "key_deposit",
            Payload::TAssistRequest { .. } => "t_assist_request",
            Payload::TAssistDone { .. } => "t_assist_done",
            Payload::EvalResult { .. } => "eval_result",
            Payload::FinalKeyDelivery { .. } => "final_key_delivery",
        }
    }

    /// The one sender/receiver pair this payload kind is allowed to use.
    pub fn legal_route(&self) -> (Party, Party) {
        match self {
            Payload::CiphertextUpload { .. } => (Party::Client, Party::Evaluator),
            Payload::KeyDeposit { .. } => (Party::Client, Party::Trusted),
            Payload::TAssistRequest { .. } => (Party::Evaluator, Party::Trusted),
            Payload::TAssistDone { .. } => (Party::Trusted, Party::Evaluator),
            Payload::EvalResult { .. } => (Party::Evaluator, Party::Client),
            Payload::FinalKeyDelivery { .. } => (Party::Trusted, Party::Client),
        }
    }

    pub fn carries_keys(&self) -> bool {
        matches!(
            self,
            Payload::KeyDeposit { .. } | Payload::FinalKeyDelivery { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub from: Party,
    pub to: Party,
    pub payload: Payload,
}

/// Ordered record of every classical message in a session. Serialized as
/// JSON Lines, one message per line.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript::default()
    }

    pub fn push(&mut self, from: Party, to: Party, payload: Payload) {
        self.messages.push(Message { from, to, payload });
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&serde_json::to_string(m)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut messages = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            messages.push(serde_json::from_str(line)?);
        }
        Ok(Transcript { messages })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_jsonl()?)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Transcript::from_jsonl(&std::fs::read_to_string(path)?)
    }
}

/// Findings from a transcript audit. Violations are reported, not thrown:
/// an audited transcript may well be one that was tampered with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks routing legality, key-material hygiene, and assist pairing.
pub fn audit(transcript: &Transcript) -> AuditReport {
    let mut violations = Vec::new();
    let mut deposit_seen = false;
    let mut open_assists: Vec<usize> = Vec::new();
    for (i, m) in transcript.messages.iter().enumerate() {
        if m.from == m.to {
            violations.push(format!("message {i}: {} sent {} to itself", m.from, m.payload.kind()));
        }
        let (from, to) = m.payload.legal_route();
        if (m.from, m.to) != (from, to) {
            violations.push(format!(
                "message {i}: {} may only travel {from} -> {to}, saw {} -> {}",
                m.payload.kind(),
                m.from,
                m.to
            ));
        }
        if m.payload.carries_keys() && m.to == Party::Evaluator {
            violations.push(format!(
                "message {i}: key material ({}) addressed to the evaluator",
                m.payload.kind()
            ));
        }
        match &m.payload {
            Payload::KeyDeposit { .. } => deposit_seen = true,
            Payload::TAssistRequest { step, .. } => {
                if !deposit_seen {
                    violations.push(format!(
                        "message {i}: assist requested for step {step} before any key deposit"
                    ));
                }
                open_assists.push(*step);
            }
            Payload::TAssistDone { step } => {
                match open_assists.iter().position(|s| s == step) {
                    Some(pos) => {
                        open_assists.remove(pos);
                    }
                    None => violations.push(format!(
                        "message {i}: assist done for step {step} without a matching request"
                    )),
                }
            }
            _ => {}
        }
    }
    for step in open_assists {
        violations.push(format!("assist request for step {step} was never resolved"));
    }
    AuditReport { violations }
}

/// What a message body looks like from the evaluator's side. There is no
/// variant that can hold a key set, so key material cannot leak into this
/// view even from a malformed transcript; such bodies collapse to
/// [`EvaluatorPayload::Withheld`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EvaluatorPayload {
    CiphertextUpload { qubits: usize, circuit: Circuit },
    TAssistRequest { step: usize, qubit: usize },
    TAssistDone { step: usize },
    EvalResult { histogram: ShotHistogram },
    Withheld { kind: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorMessage {
    pub from: Party,
    pub to: Party,
    pub payload: EvaluatorPayload,
}

/// The messages the evaluator sends or receives, with key-bearing bodies
/// structurally removed.
pub fn evaluator_view(transcript: &Transcript) -> Vec<EvaluatorMessage> {
    transcript
        .messages
        .iter()
        .filter(|m| m.from == Party::Evaluator || m.to == Party::Evaluator)
        .map(|m| {
            let payload = match &m.payload {
                Payload::CiphertextUpload { qubits, circuit } => EvaluatorPayload::CiphertextUpload {
                    qubits: *qubits,
                    circuit: circuit.clone(),
                },
                Payload::TAssistRequest { step, qubit } => EvaluatorPayload::TAssistRequest {
                    step: *step,
                    qubit: *qubit,
                },
                Payload::TAssistDone { step } => EvaluatorPayload::TAssistDone { step: *step },
                Payload::EvalResult { histogram } => EvaluatorPayload::EvalResult {
                    histogram: histogram.clone(),
                },
                other => EvaluatorPayload::Withheld {
                    kind: other.kind().to_string(),
                },
            };
            EvaluatorMessage {
                from: m.from,
                to: m.to,
                payload,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub mode: TGateMode,
    pub shots: u64,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            mode: TGateMode::default(),
            shots: 8192,
            seed: 7,
        }
    }
}

/// Everything a finished session leaves behind.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    /// Counts as the evaluator measured them, still masked.
    pub ciphertext: ShotHistogram,
    /// The same counts after the client XORs off the final a bits.
    pub decrypted: ShotHistogram,
    pub final_keys: KeySet,
    pub ledger: KeyLedger,
    /// The shared register at the end of evaluation, before measurement.
    pub ciphertext_state: PureState<f64>,
    pub transcript: Transcript,
}

impl SessionOutcome {
    /// Exact outcome distribution of the decrypted output, indexed by
    /// plaintext basis index: the ciphertext distribution with the final
    /// a-bit pattern XORed off.
    pub fn decrypted_distribution(&self) -> Vec<f64> {
        let n = self.ciphertext_state.qubits();
        let mask: usize = self
            .final_keys
            .a_bits()
            .iter()
            .enumerate()
            .map(|(q, &a)| (a as usize) << (n - 1 - q))
            .sum();
        let p = self.ciphertext_state.probabilities();
        let mut out = vec![0.0; p.len()];
        for (i, &pi) in p.iter().enumerate() {
            out[i ^ mask] = pi;
        }
        out
    }
}

/// Runs one full delegated-evaluation session.
///
/// The circuit is first rewritten for evaluation (composite gates expanded),
/// then every step is either applied by the evaluator directly (Clifford) or
/// routed through the trusted party (T and Tdg), exactly as the transcript
/// records. Step numbers refer to the rewritten circuit, 1-based.
pub fn run_delegated(
    plain: &PureState<f64>,
    circuit: &Circuit,
    keys: &KeySet,
    cfg: &SessionConfig,
) -> Result<SessionOutcome> {
    if circuit.qubits != plain.qubits() {
        return Err(Error::QubitCountMismatch {
            expected: plain.qubits(),
            actual: circuit.qubits,
        });
    }
    if keys.len() != plain.qubits() {
        return Err(Error::KeyLength {
            expected: plain.qubits(),
            actual: keys.len(),
        });
    }
    let eval_circuit = circuit.decomposed_for_eval()?;
    eval_circuit.validate()?;

    let mut trusted_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    trusted_rng.set_stream(1);
    let mut sample_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sample_rng.set_stream(2);

    let mut transcript = Transcript::new();
    let mut shared = plain.clone();
    encrypt(&mut shared, keys)?;
    transcript.push(
        Party::Client,
        Party::Evaluator,
        Payload::CiphertextUpload {
            qubits: eval_circuit.qubits,
            circuit: eval_circuit.clone(),
        },
    );
    transcript.push(
        Party::Client,
        Party::Trusted,
        Payload::KeyDeposit { keys: keys.clone() },
    );

    let mut current = keys.clone();
    let mut entries = Vec::with_capacity(eval_circuit.ops.len());
    for (i, op) in eval_circuit.ops.iter().enumerate() {
        let step = i + 1;
        let s_correction = match op {
            GateOp::T(q) | GateOp::Tdg(q) => {
                transcript.push(
                    Party::Evaluator,
                    Party::Trusted,
                    Payload::TAssistRequest { step, qubit: *q },
                );
                let pair = current.get(*q);
                let assist = t_key_update(cfg.mode, pair, &mut trusted_rng);
                for g in t_assist_ops(op, *q, pair, assist, cfg.mode)? {
                    shared.apply(&g)?;
                }
                let mut pairs = current.pairs.clone();
                pairs[*q] = assist.new_pair;
                current = KeySet::new(pairs);
                transcript.push(Party::Trusted, Party::Evaluator, Payload::TAssistDone { step });
                assist.s_correction
            }
            _ => {
                shared.apply(op)?;
                current = rule_update(op, &current)?;
                0
            }
        };
        entries.push(LedgerEntry {
            step,
            gate: op.label(),
            s_correction,
            keys: current.clone(),
        });
    }

    let ciphertext = sample_shots(&shared, cfg.shots, &mut sample_rng);
    transcript.push(
        Party::Evaluator,
        Party::Client,
        Payload::EvalResult {
            histogram: ciphertext.clone(),
        },
    );
    transcript.push(
        Party::Trusted,
        Party::Client,
        Payload::FinalKeyDelivery {
            keys: current.clone(),
        },
    );
    let decrypted = decrypt_histogram(&ciphertext, &current)?;

    Ok(SessionOutcome {
        ciphertext,
        decrypted,
        final_keys: current.clone(),
        ledger: KeyLedger {
            mode: cfg.mode,
            initial: keys.clone(),
            entries,
        },
        ciphertext_state: shared,
        transcript,
    })
}
