//! Shared fixtures for the criterion benches.

use qubench_core::circgen::{generate_random_circuit, Circuit, Topology};
use qubench_core::noise::NoiseModel;
use qubench_core::protocols::{Protocol, ProtocolRunSpec};

/// Random circuit on a line; a single qubit gets no cnots.
pub fn line_circuit(width: usize, depth: usize, seed: u64) -> Circuit {
    let xi = if width > 1 { 0.5 } else { 0.0 };
    generate_random_circuit(width, depth, xi, &Topology::line(width), seed).expect("feasible generation")
}

pub fn combined_noise() -> NoiseModel {
    NoiseModel::combine(&[("t1", 1e-2), ("t2", 1e-2), ("coherent1q", 1e-2)]).expect("known presets")
}

/// One (depth, circuit) cell's worth of work for `protocol` on two qubits.
pub fn small_spec(protocol: Protocol) -> ProtocolRunSpec {
    ProtocolRunSpec {
        protocol,
        width: 2,
        topology: Topology::line(2),
        xi: 0.75,
        depths: vec![4, 8],
        circuits_per_depth: 1,
        shots: 0,
        noise: combined_noise(),
        seed: 11,
    }
}
