use serde::{Deserialize, Serialize};

use super::{Gate, GateOp, Topology};
use crate::error::{Error, Result};
use crate::qcore::{kernel, CMatrix};

/// Largest width for which dense ideal unitaries are built.
pub const MAX_UNITARY_WIDTH: usize = 6;

/// Gates executed in parallel; no qubit appears twice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Layer {
    pub ops: Vec<GateOp>,
}

impl Layer {
    pub fn new(ops: Vec<GateOp>) -> Self {
        Self { ops }
    }

    pub fn touched(&self) -> impl Iterator<Item = usize> + '_ {
        self.ops.iter().flat_map(|op| op.qubits.iter().copied())
    }

    pub fn cnot_count(&self) -> usize {
        self.ops.iter().filter(|op| op.is_two_qubit()).count()
    }

    pub fn op_on(&self, q: usize) -> Option<&GateOp> {
        self.ops.iter().find(|op| op.qubits.contains(&q))
    }

    pub fn validate(&self, width: usize) -> Result<()> {
        let mut seen = 0u64;
        for op in &self.ops {
            op.validate()?;
            for &q in &op.qubits {
                if q >= width {
                    return Err(Error::InvalidInput(format!("qubit {q} outside width {width}")));
                }
                if seen & (1 << q) != 0 {
                    return Err(Error::InvalidInput(format!("qubit {q} used twice in one layer")));
                }
                seen |= 1 << q;
            }
        }
        Ok(())
    }
}

/// Per-layer inverse: same structure, every slot replaced by its inverse.
pub fn invert_layer(layer: &Layer) -> Layer {
    Layer::new(layer.ops.iter().map(GateOp::inverse).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub width: usize,
    pub seed: u64,
    pub topology: Topology,
    pub layers: Vec<Layer>,
}

impl Circuit {
    pub fn empty(width: usize, topology: Topology, seed: u64) -> Self {
        Self {
            width,
            seed,
            topology,
            layers: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn cnot_count(&self) -> usize {
        self.layers.iter().map(Layer::cnot_count).sum()
    }

    /// `2·cnots / (w·d)`
    pub fn density(&self) -> f64 {
        if self.layers.is_empty() {
            return 0.0;
        }
        2.0 * self.cnot_count() as f64 / (self.width * self.depth()) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.width > 63 {
            return Err(Error::InvalidInput(format!("unsupported width {}", self.width)));
        }
        if self.topology.n_qubits != self.width {
            return Err(Error::InvalidInput(format!(
                "topology has {} qubits but circuit width is {}",
                self.topology.n_qubits, self.width
            )));
        }
        self.topology.validate()?;
        for layer in &self.layers {
            layer.validate(self.width)?;
            for op in layer.ops.iter().filter(|op| op.is_two_qubit()) {
                if !self.topology.has_edge(op.qubits[0], op.qubits[1]) {
                    return Err(Error::InvalidInput(format!(
                        "cnot on ({}, {}) is not a topology edge",
                        op.qubits[0], op.qubits[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `self` followed by `other` (same width and topology).
    pub fn then(&self, other: &Circuit) -> Result<Circuit> {
        if self.width != other.width {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                actual: other.width,
            });
        }
        let mut out = self.clone();
        out.layers.extend(other.layers.iter().cloned());
        Ok(out)
    }

    /// Flattened `(gate, qubits)` sequence in execution order.
    pub fn gate_sequence(&self) -> Vec<(Gate, Vec<usize>)> {
        self.layers
            .iter()
            .flat_map(|l| l.ops.iter())
            .flat_map(|op| op.timed_gates())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        let c: Circuit = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Product of layer unitaries in time order (qubit 0 most significant).
pub fn ideal_unitary(circuit: &Circuit) -> Result<CMatrix> {
    let w = circuit.width;
    if w > MAX_UNITARY_WIDTH {
        return Err(Error::WidthTooLarge {
            width: w,
            max: MAX_UNITARY_WIDTH,
        });
    }
    let dim = 1usize << w;
    let mut u = CMatrix::identity(dim, dim);
    for layer in &circuit.layers {
        apply_layer_unitary(&mut u, w, layer);
    }
    Ok(u)
}

/// `u <- U_layer · u`
pub fn apply_layer_unitary(u: &mut CMatrix, w: usize, layer: &Layer) {
    for op in &layer.ops {
        kernel::left_apply(u, w, &op.unitary(), &op.qubits);
    }
}

/// Layers reversed and every slot inverted.
pub fn dagger_circuit(circuit: &Circuit) -> Circuit {
    Circuit {
        width: circuit.width,
        seed: circuit.seed,
        topology: circuit.topology.clone(),
        layers: circuit.layers.iter().rev().map(invert_layer).collect(),
    }
}
