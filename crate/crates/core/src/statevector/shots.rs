//! Measurement sampling and shot histograms.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::statevector::state::{bitstring, PureState};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Counts of measured bitstrings. Keys are full-register bitstrings with
/// qubit 0 first; counts always sum to `shots`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotHistogram {
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl ShotHistogram {
    pub fn new() -> Self {
        ShotHistogram {
            shots: 0,
            counts: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, outcome: String) {
        *self.counts.entry(outcome).or_insert(0) += 1;
        self.shots += 1;
    }

    pub fn count(&self, outcome: &str) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }

    pub fn frequency(&self, outcome: &str) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            self.count(outcome) as f64 / self.shots as f64
        }
    }

    /// Number of shots whose bit at `position` (qubit index) equals `value`.
    pub fn bit_count(&self, position: usize, value: u8) -> u64 {
        let want = if value == 0 { b'0' } else { b'1' };
        self.counts
            .iter()
            .filter(|(k, _)| k.as_bytes().get(position) == Some(&want))
            .map(|(_, c)| c)
            .sum()
    }

    /// Histogram over a subset of bit positions, in the order given.
    pub fn marginalize(&self, keep: &[usize]) -> Result<ShotHistogram> {
        let mut out = ShotHistogram::new();
        for (key, &count) in &self.counts {
            let bytes = key.as_bytes();
            let mut reduced = String::with_capacity(keep.len());
            for &pos in keep {
                let byte = bytes
                    .get(pos)
                    .ok_or_else(|| Error::input(format!("bit position {pos} out of range")))?;
                reduced.push(*byte as char);
            }
            *out.counts.entry(reduced).or_insert(0) += count;
        }
        out.shots = self.shots;
        Ok(out)
    }

    /// Re-measures the histogram through an independent bit-flip channel:
    /// each recorded bit flips with probability `p`, independently per shot.
    pub fn with_bitflip_noise<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> Result<ShotHistogram> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        let mut out = ShotHistogram::new();
        for (key, &count) in &self.counts {
            for _ in 0..count {
                let noisy: String = key
                    .bytes()
                    .map(|b| {
                        if rng.random::<f64>() < p {
                            if b == b'0' {
                                '1'
                            } else {
                                '0'
                            }
                        } else {
                            b as char
                        }
                    })
                    .collect();
                out.record(noisy);
            }
        }
        Ok(out)
    }

    /// Checks the count-sum invariant.
    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.counts.values().sum();
        if total != self.shots {
            return Err(Error::input(format!(
                "histogram counts sum to {total}, shots field says {}",
                self.shots
            )));
        }
        Ok(())
    }
}

impl Default for ShotHistogram {
    fn default() -> Self {
        Self::new()
    }
}

/// Draws `shots` independent full-register measurements.
pub fn sample_shots<T: Scalar, R: Rng + ?Sized>(
    state: &PureState<T>,
    shots: u64,
    rng: &mut R,
) -> ShotHistogram {
    let probs = state.probabilities();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0f64;
    for p in &probs {
        acc += p.to_f64().unwrap_or(0.0);
        cumulative.push(acc);
    }
    let total = acc;
    let mut hist = ShotHistogram::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= u);
        let idx = idx.min(probs.len() - 1);
        hist.record(bitstring(idx as u64, state.qubits()));
    }
    hist
}
