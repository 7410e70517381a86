use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Capabilities, CountsTable, ExecutionBackend};
use crate::circgen::Circuit;
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::qcore::format_bitstring;
use crate::seeds::mix;
use crate::sim::{sample_counts, simulate};

pub const LOCAL_MAX_QUBITS: usize = 5;

/// Probabilities below this are reported as absent outcomes.
const PROBABILITY_FLOOR: f64 = 1e-14;

/// Run `circuit` on the exact simulator. `shots == 0` returns the outcome
/// distribution itself; otherwise a sample of `shots` outcomes drawn with
/// `seed`.
pub fn local_execute(circuit: &Circuit, noise: &NoiseModel, shots: u64, seed: u64) -> Result<CountsTable> {
    if circuit.width > LOCAL_MAX_QUBITS {
        return Err(Error::WidthTooLarge {
            width: circuit.width,
            max: LOCAL_MAX_QUBITS,
        });
    }
    let probs = simulate(circuit, noise)?.probabilities();
    let w = circuit.width;
    let mut counts = BTreeMap::new();
    if shots == 0 {
        for (i, &p) in probs.iter().enumerate() {
            if p > PROBABILITY_FLOOR {
                counts.insert(format_bitstring(i, w), p);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (i, c) in sample_counts(&probs, shots, &mut rng).into_iter().enumerate() {
            if c > 0 {
                counts.insert(format_bitstring(i, w), c as f64);
            }
        }
    }
    Ok(CountsTable { shots, counts })
}

/// Local simulator behind the [`ExecutionBackend`] interface. Each call
/// draws with a fresh seed derived from the base seed.
#[derive(Debug, Clone)]
pub struct LocalBackend {
    noise: NoiseModel,
    seed: u64,
    calls: u64,
}

impl LocalBackend {
    pub fn new(noise: NoiseModel, seed: u64) -> Self {
        Self { noise, seed, calls: 0 }
    }
}

impl ExecutionBackend for LocalBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_qubits: LOCAL_MAX_QUBITS,
            supports_exact_probabilities: true,
        }
    }

    fn execute(&mut self, circuit: &Circuit, shots: u64) -> Result<CountsTable> {
        let seed = mix(self.seed, self.calls);
        self.calls += 1;
        local_execute(circuit, &self.noise, shots, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circgen::{Gate, GateOp, Layer, Topology};

    fn h_circuit() -> Circuit {
        let mut c = Circuit::empty(1, Topology::line(1), 0);
        c.layers.push(Layer::new(vec![GateOp::one(Gate::H, 0)]));
        c
    }

    #[test]
    fn idle_register_is_all_zeros() {
        let c = Circuit::empty(2, Topology::line(2), 0);
        let t = local_execute(&c, &NoiseModel::noiseless(), 100, 1).unwrap();
        assert_eq!(t.counts.len(), 1);
        assert_eq!(t.counts["00"], 100.0);
    }

    #[test]
    fn hadamard_exact_and_sampled() {
        let exact = local_execute(&h_circuit(), &NoiseModel::noiseless(), 0, 0).unwrap();
        assert!((exact.counts["0"] - 0.5).abs() < 1e-12 && (exact.counts["1"] - 0.5).abs() < 1e-12);
        let a = local_execute(&h_circuit(), &NoiseModel::noiseless(), 10_000, 9).unwrap();
        let b = local_execute(&h_circuit(), &NoiseModel::noiseless(), 10_000, 9).unwrap();
        assert_eq!(a, b);
        assert!((a.counts["0"] - 5000.0).abs() <= 4.0 * 50.0);
        assert_eq!(a.total(), 10_000.0);
    }

    #[test]
    fn width_over_capability_rejected() {
        let c = Circuit::empty(6, Topology::line(6), 0);
        assert!(matches!(
            local_execute(&c, &NoiseModel::noiseless(), 0, 0),
            Err(Error::WidthTooLarge { .. })
        ));
    }

    #[test]
    fn backend_draws_fresh_seeds() {
        let mut be = LocalBackend::new(NoiseModel::noiseless(), 3);
        assert!(be.capabilities().supports_exact_probabilities);
        let a = be.execute(&h_circuit(), 1000).unwrap();
        let b = be.execute(&h_circuit(), 1000).unwrap();
        assert_eq!(a.total(), 1000.0);
        assert_ne!(a, b);
    }
}
