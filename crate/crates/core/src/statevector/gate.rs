//! Gate vocabulary and circuits.
//!
//! `GateOp` carries its targets in the variant, so the arity of every
//! operation is correct by construction; target distinctness and range are
//! checked by [`GateOp::validate`]. `Ry` exists for client-side state
//! preparation only and is rejected by the key ledger and by delegated
//! evaluation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateOpWire", into = "GateOpWire")]
pub enum GateOp {
    I(usize),
    X(usize),
    Y(usize),
    Z(usize),
    H(usize),
    S(usize),
    Sdg(usize),
    T(usize),
    Tdg(usize),
    /// Rotation about the Y axis by the given angle.
    Ry(usize, f64),
    /// Controlled NOT; first index is the control.
    Cnot(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
    /// Doubly controlled NOT; the first two indices are the controls.
    Toffoli(usize, usize, usize),
    /// Controlled SWAP; the first index is the control.
    Cswap(usize, usize, usize),
}

impl GateOp {
    pub fn name(&self) -> &'static str {
        match self {
            GateOp::I(_) => "I",
            GateOp::X(_) => "X",
            GateOp::Y(_) => "Y",
            GateOp::Z(_) => "Z",
            GateOp::H(_) => "H",
            GateOp::S(_) => "S",
            GateOp::Sdg(_) => "Sdg",
            GateOp::T(_) => "T",
            GateOp::Tdg(_) => "Tdg",
            GateOp::Ry(_, _) => "Ry",
            GateOp::Cnot(_, _) => "CNOT",
            GateOp::Cz(_, _) => "CZ",
            GateOp::Swap(_, _) => "SWAP",
            GateOp::Toffoli(_, _, _) => "TOFFOLI",
            GateOp::Cswap(_, _, _) => "CSWAP",
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match *self {
            GateOp::I(q)
            | GateOp::X(q)
            | GateOp::Y(q)
            | GateOp::Z(q)
            | GateOp::H(q)
            | GateOp::S(q)
            | GateOp::Sdg(q)
            | GateOp::T(q)
            | GateOp::Tdg(q)
            | GateOp::Ry(q, _) => vec![q],
            GateOp::Cnot(a, b) | GateOp::Cz(a, b) | GateOp::Swap(a, b) => vec![a, b],
            GateOp::Toffoli(a, b, c) | GateOp::Cswap(a, b, c) => vec![a, b, c],
        }
    }

    pub fn arity(&self) -> usize {
        self.targets().len()
    }

    /// Checks target range and distinctness against a register width.
    pub fn validate(&self, qubits: usize) -> Result<()> {
        let targets = self.targets();
        for &t in &targets {
            if t >= qubits {
                return Err(Error::QubitOutOfRange { index: t, qubits });
            }
        }
        for i in 0..targets.len() {
            for j in i + 1..targets.len() {
                if targets[i] == targets[j] {
                    return Err(Error::DuplicateTargets(targets));
                }
            }
        }
        Ok(())
    }

    /// Same gate with each target mapped through `f`.
    pub fn relabeled(&self, f: impl Fn(usize) -> usize) -> GateOp {
        match *self {
            GateOp::I(q) => GateOp::I(f(q)),
            GateOp::X(q) => GateOp::X(f(q)),
            GateOp::Y(q) => GateOp::Y(f(q)),
            GateOp::Z(q) => GateOp::Z(f(q)),
            GateOp::H(q) => GateOp::H(f(q)),
            GateOp::S(q) => GateOp::S(f(q)),
            GateOp::Sdg(q) => GateOp::Sdg(f(q)),
            GateOp::T(q) => GateOp::T(f(q)),
            GateOp::Tdg(q) => GateOp::Tdg(f(q)),
            GateOp::Ry(q, a) => GateOp::Ry(f(q), a),
            GateOp::Cnot(a, b) => GateOp::Cnot(f(a), f(b)),
            GateOp::Cz(a, b) => GateOp::Cz(f(a), f(b)),
            GateOp::Swap(a, b) => GateOp::Swap(f(a), f(b)),
            GateOp::Toffoli(a, b, c) => GateOp::Toffoli(f(a), f(b), f(c)),
            GateOp::Cswap(a, b, c) => GateOp::Cswap(f(a), f(b), f(c)),
        }
    }

    /// Same gate acting on targets shifted up by `offset`.
    pub fn shifted(&self, offset: usize) -> GateOp {
        self.relabeled(|q| q + offset)
    }

    /// Display form used by ledgers, e.g. `CZ(0,1)` or `Tdg(2)`.
    pub fn label(&self) -> String {
        let targets: Vec<String> = self.targets().iter().map(|t| t.to_string()).collect();
        format!("{}({})", self.name(), targets.join(","))
    }
}

/// Wire representation: `{"gate": "CNOT", "targets": [0, 1]}`.
#[derive(Serialize, Deserialize)]
struct GateOpWire {
    gate: String,
    targets: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
}

impl From<GateOp> for GateOpWire {
    fn from(op: GateOp) -> Self {
        let angle = match op {
            GateOp::Ry(_, a) => Some(a),
            _ => None,
        };
        GateOpWire {
            gate: op.name().to_string(),
            targets: op.targets(),
            angle,
        }
    }
}

impl TryFrom<GateOpWire> for GateOp {
    type Error = Error;

    fn try_from(w: GateOpWire) -> Result<GateOp> {
        let t = &w.targets;
        let want = |n: usize| -> Result<()> {
            if t.len() == n {
                Ok(())
            } else {
                Err(Error::input(format!(
                    "gate {} takes {} target(s), got {}",
                    w.gate,
                    n,
                    t.len()
                )))
            }
        };
        let op = match w.gate.to_ascii_uppercase().as_str() {
            "I" => {
                want(1)?;
                GateOp::I(t[0])
            }
            "X" => {
                want(1)?;
                GateOp::X(t[0])
            }
            "Y" => {
                want(1)?;
                GateOp::Y(t[0])
            }
            "Z" => {
                want(1)?;
                GateOp::Z(t[0])
            }
            "H" => {
                want(1)?;
                GateOp::H(t[0])
            }
            "S" => {
                want(1)?;
                GateOp::S(t[0])
            }
            "SDG" => {
                want(1)?;
                GateOp::Sdg(t[0])
            }
            "T" => {
                want(1)?;
                GateOp::T(t[0])
            }
            "TDG" => {
                want(1)?;
                GateOp::Tdg(t[0])
            }
            "RY" => {
                want(1)?;
                let angle = w
                    .angle
                    .ok_or_else(|| Error::input("gate Ry requires an \"angle\" field"))?;
                GateOp::Ry(t[0], angle)
            }
            "CNOT" => {
                want(2)?;
                GateOp::Cnot(t[0], t[1])
            }
            "CZ" => {
                want(2)?;
                GateOp::Cz(t[0], t[1])
            }
            "SWAP" => {
                want(2)?;
                GateOp::Swap(t[0], t[1])
            }
            "TOFFOLI" => {
                want(3)?;
                GateOp::Toffoli(t[0], t[1], t[2])
            }
            "CSWAP" => {
                want(3)?;
                GateOp::Cswap(t[0], t[1], t[2])
            }
            other => return Err(Error::input(format!("unknown gate \"{other}\""))),
        };
        if w.angle.is_some() && !matches!(op, GateOp::Ry(_, _)) {
            return Err(Error::input(format!(
                "gate {} does not take an angle",
                op.name()
            )));
        }
        Ok(op)
    }
}

/// An ordered gate list over a fixed-width register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub qubits: usize,
    pub ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Circuit {
            qubits,
            ops: Vec::new(),
        }
    }

    pub fn with_ops(qubits: usize, ops: Vec<GateOp>) -> Self {
        Circuit { qubits, ops }
    }

    pub fn push(&mut self, op: GateOp) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn extend(&mut self, ops: impl IntoIterator<Item = GateOp>) -> &mut Self {
        self.ops.extend(ops);
        self
    }

    /// Validates every op against the register width.
    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 {
            return Err(Error::Empty("register"));
        }
        for op in &self.ops {
            op.validate(self.qubits)?;
        }
        Ok(())
    }

    /// Appends another circuit's ops with targets shifted by `offset`.
    pub fn embed(&mut self, other: &Circuit, offset: usize) -> Result<&mut Self> {
        if offset + other.qubits > self.qubits {
            return Err(Error::QubitCountMismatch {
                expected: self.qubits,
                actual: offset + other.qubits,
            });
        }
        for op in &other.ops {
            self.ops.push(op.shifted(offset));
        }
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Circuit = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// Rewrites the circuit over the gate set accepted by delegated
    /// evaluation: three-qubit gates and SWAP are expanded, everything else
    /// passes through. `Ry` is rejected because it cannot be evaluated
    /// under a Pauli mask.
    pub fn decomposed_for_eval(&self) -> Result<Circuit> {
        let mut out = Circuit::new(self.qubits);
        for op in &self.ops {
            match op {
                GateOp::Toffoli(_, _, _) | GateOp::Cswap(_, _, _) => {
                    out.ops.extend(decompose(op)?);
                }
                GateOp::Swap(a, b) => {
                    out.ops.push(GateOp::Cnot(*a, *b));
                    out.ops.push(GateOp::Cnot(*b, *a));
                    out.ops.push(GateOp::Cnot(*a, *b));
                }
                GateOp::Ry(_, _) => {
                    return Err(Error::UnsupportedEvalGate(op.label()));
                }
                other => out.ops.push(other.clone()),
            }
        }
        Ok(out)
    }
}

/// Fixed Clifford+T expansion of the three-qubit gates.
///
/// TOFFOLI uses the 15-gate network (7 T-type, 6 CNOT, 2 H); CSWAP wraps it
/// in a CNOT pair so the expansion stays over {H, T, Tdg, CNOT}. The result
/// is matrix-equal to the native gate, not merely equal up to phase.
pub fn decompose(op: &GateOp) -> Result<Vec<GateOp>> {
    match *op {
        GateOp::Toffoli(a, b, c) => Ok(vec![
            GateOp::H(c),
            GateOp::Cnot(b, c),
            GateOp::Tdg(c),
            GateOp::Cnot(a, c),
            GateOp::T(c),
            GateOp::Cnot(b, c),
            GateOp::Tdg(c),
            GateOp::Cnot(a, c),
            GateOp::T(b),
            GateOp::T(c),
            GateOp::H(c),
            GateOp::Cnot(a, b),
            GateOp::T(a),
            GateOp::Tdg(b),
            GateOp::Cnot(a, b),
        ]),
        GateOp::Cswap(c, x, y) => {
            let mut ops = vec![GateOp::Cnot(y, x)];
            ops.extend(decompose(&GateOp::Toffoli(c, x, y))?);
            ops.push(GateOp::Cnot(y, x));
            Ok(ops)
        }
        ref other => Err(Error::NoDecomposition(other.label())),
    }
}
