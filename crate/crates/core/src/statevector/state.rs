//! Dense state-vector simulation.
//!
//! Amplitudes are stored as one contiguous `Vec<Complex<T>>` of length 2^n.
//! Qubit 0 is the most significant bit of a basis index: on three qubits,
//! `X(0)` applied to |000> yields index 4, printed as "100".

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::statevector::gate::{Circuit, GateOp};
use num_complex::Complex;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T: Scalar = f64> {
    qubits: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Scalar> PureState<T> {
    /// |0...0> on `qubits` qubits.
    pub fn zero(qubits: usize) -> Result<Self> {
        Self::basis(qubits, 0)
    }

    /// Computational basis state with the given index.
    pub fn basis(qubits: usize, index: u64) -> Result<Self> {
        check_width(qubits)?;
        let dim = 1u64 << qubits;
        if index >= dim {
            return Err(Error::BasisOutOfRange { index, qubits });
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); dim as usize];
        amps[index as usize] = Complex::new(T::one(), T::zero());
        Ok(PureState { qubits, amps })
    }

    /// Builds a state from raw amplitudes, normalizing them. The length
    /// must be a power of two and the vector must not be all zero.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let qubits = len.trailing_zeros() as usize;
        check_width(qubits)?;
        let mut state = PureState { qubits, amps };
        let norm = state.norm_sqr().sqrt();
        if norm <= T::zero() {
            return Err(Error::ZeroVector);
        }
        for a in &mut state.amps {
            *a = a.unscale(norm);
        }
        Ok(state)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amplitude(&self, index: u64) -> Complex<T> {
        self.amps[index as usize]
    }

    pub fn norm_sqr(&self) -> T {
        let mut sum = T::zero();
        for a in &self.amps {
            sum += a.norm_sqr();
        }
        sum
    }

    /// Applies one gate in place.
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.qubits)?;
        let n = self.qubits;
        let bit = |q: usize| 1usize << (n - 1 - q);
        match *op {
            GateOp::I(_) => {}
            GateOp::X(q) => {
                let m = bit(q);
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        self.amps.swap(i, i | m);
                    }
                }
            }
            GateOp::Y(q) => {
                let m = bit(q);
                let im = Complex::new(T::zero(), T::one());
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        let j = i | m;
                        let (a0, a1) = (self.amps[i], self.amps[j]);
                        self.amps[i] = -im * a1;
                        self.amps[j] = im * a0;
                    }
                }
            }
            GateOp::Z(q) => self.phase_where_set(bit(q), -Complex::new(T::one(), T::zero())),
            GateOp::H(q) => {
                let m = bit(q);
                let f = T::FRAC_1_SQRT_2();
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        let j = i | m;
                        let (a0, a1) = (self.amps[i], self.amps[j]);
                        self.amps[i] = (a0 + a1).scale(f);
                        self.amps[j] = (a0 - a1).scale(f);
                    }
                }
            }
            GateOp::S(q) => self.phase_where_set(bit(q), Complex::new(T::zero(), T::one())),
            GateOp::Sdg(q) => self.phase_where_set(bit(q), Complex::new(T::zero(), -T::one())),
            GateOp::T(q) => {
                self.phase_where_set(bit(q), Complex::from_polar(T::one(), T::FRAC_PI_4()))
            }
            GateOp::Tdg(q) => {
                self.phase_where_set(bit(q), Complex::from_polar(T::one(), -T::FRAC_PI_4()))
            }
            GateOp::Ry(q, angle) => {
                let m = bit(q);
                let half = T::from_f64_const(angle / 2.0);
                let (c, s) = (half.cos(), half.sin());
                for i in 0..self.amps.len() {
                    if i & m == 0 {
                        let j = i | m;
                        let (a0, a1) = (self.amps[i], self.amps[j]);
                        self.amps[i] = a0.scale(c) - a1.scale(s);
                        self.amps[j] = a0.scale(s) + a1.scale(c);
                    }
                }
            }
            GateOp::Cnot(c, t) => {
                let (mc, mt) = (bit(c), bit(t));
                for i in 0..self.amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        self.amps.swap(i, i | mt);
                    }
                }
            }
            GateOp::Cz(a, b) => {
                let m = bit(a) | bit(b);
                let minus = -Complex::new(T::one(), T::zero());
                for i in 0..self.amps.len() {
                    if i & m == m {
                        self.amps[i] *= minus;
                    }
                }
            }
            GateOp::Swap(a, b) => {
                let (ma, mb) = (bit(a), bit(b));
                for i in 0..self.amps.len() {
                    if i & ma != 0 && i & mb == 0 {
                        self.amps.swap(i, i ^ ma ^ mb);
                    }
                }
            }
            GateOp::Toffoli(c1, c2, t) => {
                let (m1, m2, mt) = (bit(c1), bit(c2), bit(t));
                for i in 0..self.amps.len() {
                    if i & m1 != 0 && i & m2 != 0 && i & mt == 0 {
                        self.amps.swap(i, i | mt);
                    }
                }
            }
            GateOp::Cswap(c, a, b) => {
                let (mc, ma, mb) = (bit(c), bit(a), bit(b));
                for i in 0..self.amps.len() {
                    if i & mc != 0 && i & ma != 0 && i & mb == 0 {
                        self.amps.swap(i, i ^ ma ^ mb);
                    }
                }
            }
        }
        debug_assert!(
            (self.norm_sqr() - T::one()).abs() < T::norm_tolerance(),
            "norm drifted after {}",
            op.label()
        );
        Ok(())
    }

    fn phase_where_set(&mut self, mask: usize, phase: Complex<T>) {
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                self.amps[i] *= phase;
            }
        }
    }

    /// Applies every op of a circuit in order.
    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.qubits != self.qubits {
            return Err(Error::QubitCountMismatch {
                expected: self.qubits,
                actual: circuit.qubits,
            });
        }
        for op in &circuit.ops {
            self.apply(op)?;
        }
        Ok(())
    }

    /// Probability of each basis outcome.
    pub fn probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Marginal probability that the listed qubits read the listed bit values.
    pub fn outcome_probability(&self, qubits: &[usize], bits: &[u8]) -> Result<T> {
        if qubits.len() != bits.len() {
            return Err(Error::input(format!(
                "{} qubits but {} bit values",
                qubits.len(),
                bits.len()
            )));
        }
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    qubits: self.qubits,
                });
            }
            if bits[i] > 1 {
                return Err(Error::input(format!("bit value {} is not 0/1", bits[i])));
            }
            if qubits[..i].contains(&q) {
                return Err(Error::DuplicateTargets(qubits.to_vec()));
            }
        }
        let n = self.qubits;
        let mut p = T::zero();
        'outer: for (idx, a) in self.amps.iter().enumerate() {
            for (&q, &b) in qubits.iter().zip(bits) {
                let got = ((idx >> (n - 1 - q)) & 1) as u8;
                if got != b {
                    continue 'outer;
                }
            }
            p += a.norm_sqr();
        }
        Ok(p)
    }

    /// |<self|other>|^2.
    pub fn overlap_sq(&self, other: &PureState<T>) -> Result<T> {
        if self.qubits != other.qubits {
            return Err(Error::QubitCountMismatch {
                expected: self.qubits,
                actual: other.qubits,
            });
        }
        let mut dot = Complex::new(T::zero(), T::zero());
        for (a, b) in self.amps.iter().zip(&other.amps) {
            dot += a.conj() * *b;
        }
        Ok(dot.norm_sqr())
    }

    /// Tensor product; `self`'s qubits become the leading (most significant)
    /// qubits of the result.
    pub fn tensor(&self, other: &PureState<T>) -> Result<PureState<T>> {
        check_width(self.qubits + other.qubits)?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(*a * *b);
            }
        }
        Ok(PureState {
            qubits: self.qubits + other.qubits,
            amps,
        })
    }
}

fn check_width(qubits: usize) -> Result<()> {
    if qubits == 0 {
        return Err(Error::Empty("register"));
    }
    let cap = crate::qubit_cap();
    if qubits > cap {
        return Err(Error::QubitCapExceeded {
            requested: qubits,
            cap,
        });
    }
    Ok(())
}

/// Full unitary of a circuit, row-major: `u[i][j]` = <i|U|j>. Columns are
/// computed by running the circuit on each basis state, so the cost is
/// 2^n circuit executions; intended for small registers and tests.
pub fn circuit_unitary<T: Scalar>(circuit: &Circuit) -> Result<Vec<Vec<Complex<T>>>> {
    let dim = 1usize << circuit.qubits;
    let mut u = vec![vec![Complex::new(T::zero(), T::zero()); dim]; dim];
    for j in 0..dim {
        let mut state = PureState::<T>::basis(circuit.qubits, j as u64)?;
        state.run(circuit)?;
        for i in 0..dim {
            u[i][j] = state.amps[i];
        }
    }
    Ok(u)
}

/// Renders a basis index as a bitstring, qubit 0 first.
pub fn bitstring(index: u64, qubits: usize) -> String {
    format!("{index:0qubits$b}")
}

/// Parses a bitstring (qubit 0 first) into a basis index.
pub fn parse_bitstring(s: &str) -> Result<u64> {
    if s.is_empty() {
        return Err(Error::Empty("bitstring"));
    }
    u64::from_str_radix(s, 2).map_err(|_| Error::input(format!("invalid bitstring \"{s}\"")))
}
