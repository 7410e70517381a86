//! Direct, mirror and cycle benchmarking on the noisy simulator.
//!
//! Every `(depth, circuit index)` cell is generated and simulated from its
//! own derived seed, so output is independent of how cells are scheduled.

mod crb;
mod drb;
mod mrb;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circgen::{Circuit, Topology};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::qcore::{format_bitstring, parse_bitstring, DensityMatrix, PauliString};
use crate::twirl::TwirlRecord;

pub use crb::{crb_pauli_set, run_crb};
pub use drb::{run_drb, stabilizer_prep_layers};
pub use mrb::{effective_polarization, run_mrb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    DRB,
    MRB,
    CRB,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::MRB, Protocol::DRB, Protocol::CRB];

    pub fn label(self) -> &'static str {
        match self {
            Protocol::DRB => "DRB",
            Protocol::MRB => "MRB",
            Protocol::CRB => "CRB",
        }
    }

    /// Benchmark layers per unit of sequence depth.
    pub fn layers_per_depth(self) -> usize {
        match self {
            Protocol::DRB => 2,
            Protocol::MRB => 1,
            Protocol::CRB => 2,
        }
    }

    /// Asymptotic value of the decay for a fully depolarized register.
    pub fn floor(self, width: usize) -> f64 {
        match self {
            Protocol::DRB => 1.0 / (1u64 << width) as f64,
            Protocol::MRB | Protocol::CRB => 0.0,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DRB" => Ok(Protocol::DRB),
            "MRB" => Ok(Protocol::MRB),
            "CRB" => Ok(Protocol::CRB),
            other => Err(Error::InvalidInput(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRunSpec {
    pub protocol: Protocol,
    pub width: usize,
    pub topology: Topology,
    pub xi: f64,
    pub depths: Vec<usize>,
    pub circuits_per_depth: usize,
    /// 0 means exact probabilities.
    pub shots: u64,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl ProtocolRunSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::InvalidInput("width must be at least 1".into()));
        }
        if self.topology.n_qubits != self.width {
            return Err(Error::InvalidInput(format!(
                "topology has {} qubits but width is {}",
                self.topology.n_qubits, self.width
            )));
        }
        if self.depths.len() < 2 || self.depths.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidInput(format!(
                "depths must be strictly increasing with at least two entries, got {:?}",
                self.depths
            )));
        }
        if self.depths[0] == 0 {
            return Err(Error::InvalidInput("depths must be positive".into()));
        }
        if self.circuits_per_depth == 0 {
            return Err(Error::InvalidInput("circuits_per_depth must be at least 1".into()));
        }
        if self.protocol == Protocol::MRB {
            if let Some(m) = self.depths.iter().find(|m| *m % 2 == 1) {
                return Err(Error::InvalidInput(format!("mirror depth {m} is odd")));
            }
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::OutOfRange {
                name: "xi",
                value: self.xi,
                range: "[0, 1]",
            });
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(usize, usize)> {
        self.depths
            .iter()
            .flat_map(|&m| (0..self.circuits_per_depth).map(move |k| (m, k)))
            .collect()
    }
}

/// One observed value of a decay curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub protocol: Protocol,
    #[serde(rename = "m")]
    pub depth: usize,
    pub circuit_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli_label: Option<PauliString>,
    pub value: f64,
}

/// Everything needed to audit one executed circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub depth: usize,
    pub index: usize,
    pub circuit_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli_label: Option<PauliString>,
    pub circuit: Circuit,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub twirl_records: Vec<TwirlRecord>,
    /// Indices into `circuit.layers` of the layers being benchmarked.
    pub benchmark_layers: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purity_after_prep: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purity_final: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutput {
    pub protocol: Protocol,
    pub width: usize,
    pub layers_per_depth: usize,
    pub samples: Vec<DecaySample>,
    pub circuits: Vec<CircuitRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pauli_set: Vec<PauliString>,
    #[serde(default)]
    pub pauli_set_sampled: bool,
}

/// Dispatch on `spec.protocol`.
pub fn run_protocol(spec: &ProtocolRunSpec) -> Result<ProtocolOutput> {
    match spec.protocol {
        Protocol::DRB => run_drb(spec),
        Protocol::MRB => run_mrb(spec),
        Protocol::CRB => run_crb(spec),
    }
}

pub(crate) fn expect_protocol(spec: &ProtocolRunSpec, want: Protocol) -> Result<()> {
    if spec.protocol != want {
        return Err(Error::InvalidInput(format!(
            "spec is for {} but {want} was requested",
            spec.protocol
        )));
    }
    spec.validate()
}

/// Run every cell in parallel, keeping cell order.
pub(crate) fn run_cells<T: Send>(
    spec: &ProtocolRunSpec,
    f: impl Fn(usize, usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    spec.cells().into_par_iter().map(|(m, k)| f(m, k)).collect()
}

/// `⟨target|ρ|target⟩`, clamped to [0, 1].
pub fn survival_probability(final_state: &DensityMatrix, target_bitstring: &str) -> Result<f64> {
    if target_bitstring.len() != final_state.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: final_state.n_qubits(),
            actual: target_bitstring.len(),
        });
    }
    let idx = parse_bitstring(target_bitstring)?;
    Ok(final_state.matrix()[(idx, idx)].re.clamp(0.0, 1.0))
}

/// Estimate of a probability from `shots` Bernoulli trials.
pub(crate) fn binomial_estimate<R: Rng>(p: f64, shots: u64, rng: &mut R) -> f64 {
    let dist = Binomial::new(shots, p.clamp(0.0, 1.0)).expect("probability clamped to [0, 1]");
    dist.sample(rng) as f64 / shots as f64
}

/// Index of the single outcome an ideal run produces.
pub(crate) fn deterministic_outcome(probs: &[f64]) -> Result<usize> {
    let (idx, &p) = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InvalidState("empty distribution".into()))?;
    if (p - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "ideal circuit is not deterministic (max probability {p})"
        )));
    }
    Ok(idx)
}

pub(crate) fn bitstring(idx: usize, w: usize) -> String {
    format_bitstring(idx, w)
}
