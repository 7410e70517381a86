//! Circuits, connectivity, the density-parameterized random generator and
//! inversion utilities.

mod circuit;
mod gate;
mod generate;
mod qasm;
mod topology;

pub use circuit::{apply_layer_unitary, dagger_circuit, ideal_unitary, invert_layer, Circuit, Layer, MAX_UNITARY_WIDTH};
pub use gate::{Gate, GateOp};
pub use generate::{generate_random_circuit, target_cnot_count};
pub(crate) use generate::generate_with_rng;
pub use qasm::{parse_openqasm, to_openqasm};
pub use topology::{Topology, TopologyKind};
