//! Noisy layer-by-layer execution on density matrices and on arbitrary
//! operators (the latter feeds channel extraction).

use rand::Rng;

use crate::circgen::{Circuit, Layer};
use crate::error::{Error, Result};
use crate::noise::{GateClass, NoiseKind, NoiseModel};
use crate::qcore::{kernel, CMatrix, DensityMatrix, KrausChannel};

pub const MAX_SIM_WIDTH: usize = 8;

#[derive(Debug, Clone)]
enum TwoQubitNoise {
    /// Single-qubit channel applied to each qubit of the pair.
    Local(KrausChannel),
    Joint(KrausChannel),
}

/// Noise model resolved into channels, ready to apply.
#[derive(Debug, Clone)]
pub struct NoisySimulator {
    width: usize,
    one: Vec<KrausChannel>,
    two: Vec<TwoQubitNoise>,
    idle: Vec<KrausChannel>,
    prep: Vec<KrausChannel>,
    meas: Vec<KrausChannel>,
}

impl NoisySimulator {
    pub fn new(width: usize, model: &NoiseModel) -> Result<Self> {
        if width == 0 || width > MAX_SIM_WIDTH {
            return Err(Error::WidthTooLarge {
                width,
                max: MAX_SIM_WIDTH,
            });
        }
        let mut two = Vec::new();
        for spec in model.specs(GateClass::TwoQubitGate).iter().filter(|s| s.strength > 0.0) {
            two.push(match spec.kind {
                NoiseKind::Depolarizing | NoiseKind::Coherent2Q => {
                    TwoQubitNoise::Joint(spec.channel_for(GateClass::TwoQubitGate)?)
                }
                _ => TwoQubitNoise::Local(spec.channel_for(GateClass::OneQubitGate)?),
            });
        }
        Ok(Self {
            width,
            one: model.channels(GateClass::OneQubitGate),
            two,
            idle: model.channels(GateClass::Idle),
            prep: model.channels(GateClass::StatePrep),
            meas: model.channels(GateClass::Measurement),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `op <- ε_layer(op)`: each slot's unitary followed by its noise, then
    /// idle noise on untouched qubits.
    pub fn apply_layer(&self, op: &mut CMatrix, layer: &Layer) {
        let w = self.width;
        let mut touched = vec![false; w];
        for gate in &layer.ops {
            kernel::conjugate(op, w, &gate.unitary(), &gate.qubits);
            for &q in &gate.qubits {
                touched[q] = true;
            }
            if gate.is_two_qubit() {
                for n in &self.two {
                    match n {
                        TwoQubitNoise::Joint(ch) => ch.apply_local(op, w, &gate.qubits),
                        TwoQubitNoise::Local(ch) => {
                            for &q in &gate.qubits {
                                ch.apply_local(op, w, &[q]);
                            }
                        }
                    }
                }
            } else {
                for ch in &self.one {
                    ch.apply_local(op, w, &gate.qubits);
                }
            }
        }
        if !self.idle.is_empty() {
            for q in (0..w).filter(|&q| !touched[q]) {
                for ch in &self.idle {
                    ch.apply_local(op, w, &[q]);
                }
            }
        }
    }

    pub fn apply_layers<'a>(&self, op: &mut CMatrix, layers: impl IntoIterator<Item = &'a Layer>) {
        for layer in layers {
            self.apply_layer(op, layer);
        }
    }

    fn apply_each_qubit(&self, op: &mut CMatrix, channels: &[KrausChannel]) {
        for q in 0..self.width {
            for ch in channels {
                ch.apply_local(op, self.width, &[q]);
            }
        }
    }

    /// |0…0⟩ followed by any state-preparation noise.
    pub fn prepare(&self) -> DensityMatrix {
        let mut m = DensityMatrix::zero_state(self.width).into_matrix();
        self.apply_each_qubit(&mut m, &self.prep);
        DensityMatrix::from_matrix_unchecked(self.width, m).expect("shape fixed by width")
    }

    /// Evolve `state` through `layers` (gate and idle noise only).
    pub fn evolve<'a>(&self, state: &DensityMatrix, layers: impl IntoIterator<Item = &'a Layer>) -> Result<DensityMatrix> {
        if state.n_qubits() != self.width {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                actual: state.n_qubits(),
            });
        }
        let mut m = state.matrix().clone();
        self.apply_layers(&mut m, layers);
        DensityMatrix::from_matrix_unchecked(self.width, m)
    }

    /// Apply measurement noise, if any, just before readout.
    pub fn before_readout(&self, state: DensityMatrix) -> DensityMatrix {
        if self.meas.is_empty() {
            return state;
        }
        let mut m = state.into_matrix();
        self.apply_each_qubit(&mut m, &self.meas);
        DensityMatrix::from_matrix_unchecked(self.width, m).expect("shape fixed by width")
    }

    /// Full run from |0…0⟩ including preparation and measurement noise.
    pub fn run(&self, circuit: &Circuit) -> Result<DensityMatrix> {
        if circuit.width != self.width {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                actual: circuit.width,
            });
        }
        let state = self.evolve(&self.prepare(), &circuit.layers)?;
        Ok(self.before_readout(state))
    }
}

/// Inverse-CDF sampling of `shots` outcomes from `probs`.
pub fn sample_counts<R: Rng>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let mut counts = vec![0u64; probs.len()];
    if acc <= 0.0 {
        return counts;
    }
    for _ in 0..shots {
        let u = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        counts[idx] += 1;
    }
    counts
}

/// Final state of `circuit` under `noise`, starting from |0…0⟩.
pub fn simulate(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    NoisySimulator::new(circuit.width, noise)?.run(circuit)
}
