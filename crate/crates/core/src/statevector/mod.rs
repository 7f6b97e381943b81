//! Dense state-vector simulator: gate vocabulary, pure states, sampling.

mod gate;
mod shots;
mod state;

pub use gate::{decompose, Circuit, GateOp};
pub use shots::{sample_shots, ShotHistogram};
pub use state::{bitstring, circuit_unitary, parse_bitstring, PureState};
