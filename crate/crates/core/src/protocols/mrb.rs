use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    bitstring, deterministic_outcome, expect_protocol, run_cells, CircuitRecord, DecaySample, Protocol, ProtocolOutput,
    ProtocolRunSpec,
};
use crate::circgen::{generate_with_rng, ideal_unitary, invert_layer, Circuit, Gate, GateOp, Layer};
use crate::error::{Error, Result};
use crate::seeds::{cell_seed, mix};
use crate::sim::{sample_counts, NoisySimulator};
use crate::twirl::{randomized_compile_with, FinalFrame};

/// Coset representatives of the single-qubit Cliffords modulo Paulis.
const CLIFFORD_COSETS: [&[Gate]; 6] = [
    &[],
    &[Gate::H],
    &[Gate::S],
    &[Gate::H, Gate::S],
    &[Gate::S, Gate::H],
    &[Gate::H, Gate::S, Gate::H],
];

/// Uniformly random single-qubit Clifford as one merged slot.
pub(crate) fn random_clifford_op<R: Rng>(q: usize, rng: &mut R) -> GateOp {
    let mut seq: Vec<Gate> = CLIFFORD_COSETS[rng.random_range(0..6)].to_vec();
    let pauli = [Gate::Id, Gate::X, Gate::Y, Gate::Z][rng.random_range(0..4)];
    if pauli != Gate::Id {
        seq.push(pauli);
    }
    match seq.split_first() {
        None => GateOp::one(Gate::Id, q),
        Some((&first, rest)) => GateOp {
            name: first,
            qubits: vec![q],
            pre: Vec::new(),
            post: rest.to_vec(),
        },
    }
}

/// Mirror-benchmarking statistic from outcome probabilities:
/// `S = 4^w/(4^w−1) · Σ_k (−1/2)^k h_k − 1/(4^w−1)`, where `h_k` is the
/// probability of landing at Hamming distance `k` from `target`.
pub fn effective_polarization(probs: &[f64], target: usize, w: usize) -> Result<f64> {
    if probs.len() != 1 << w {
        return Err(Error::DimensionMismatch {
            expected: 1 << w,
            actual: probs.len(),
        });
    }
    let mut h = vec![0.0; w + 1];
    for (x, &p) in probs.iter().enumerate() {
        h[(x ^ target).count_ones() as usize] += p;
    }
    let weighted: f64 = h.iter().enumerate().map(|(k, hk)| (-0.5f64).powi(k as i32) * hk).sum();
    let d2 = (1u64 << (2 * w)) as f64;
    Ok(d2 / (d2 - 1.0) * weighted - 1.0 / (d2 - 1.0))
}

/// Random Clifford layer, `m/2` random layers, their per-layer inverses in
/// reverse order, then the inverse Clifford layer; Pauli-twirled throughout.
pub fn run_mrb(spec: &ProtocolRunSpec) -> Result<ProtocolOutput> {
    expect_protocol(spec, Protocol::MRB)?;
    let w = spec.width;
    let sim = NoisySimulator::new(w, &spec.noise)?;
    let cells = run_cells(spec, |m, k| {
        let seed = cell_seed(spec.seed, "MRB", m, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clifford = Layer::new((0..w).map(|q| random_clifford_op(q, &mut rng)).collect());
        let half = generate_with_rng(w, m / 2, spec.xi, &spec.topology, seed, &mut rng)?;
        let mut base = Circuit::empty(w, spec.topology.clone(), seed);
        base.layers.push(clifford.clone());
        base.layers.extend(half.layers.iter().cloned());
        base.layers.extend(half.layers.iter().rev().map(invert_layer));
        base.layers.push(invert_layer(&clifford));

        let compiled = randomized_compile_with(&base, mix(seed, 1), FinalFrame::Track)?;
        let u = ideal_unitary(&compiled.circuit)?;
        let ideal_probs: Vec<f64> = (0..1 << w).map(|i| u[(i, 0)].norm_sqr()).collect();
        let target = deterministic_outcome(&ideal_probs)?;

        let end = sim.run(&compiled.circuit)?;
        let probs = if spec.shots > 0 {
            sample_counts(&end.probabilities(), spec.shots, &mut rng)
                .into_iter()
                .map(|c| c as f64 / spec.shots as f64)
                .collect()
        } else {
            end.probabilities()
        };
        let value = effective_polarization(&probs, target, w)?;
        let record = CircuitRecord {
            depth: m,
            index: k,
            circuit_seed: seed,
            pauli_label: None,
            benchmark_layers: (1..=m).collect(),
            circuit: compiled.circuit,
            twirl_records: compiled.records,
            target: Some(bitstring(target, w)),
            purity_after_prep: None,
            purity_final: None,
        };
        let sample = DecaySample {
            protocol: Protocol::MRB,
            depth: m,
            circuit_seed: seed,
            pauli_label: None,
            value,
        };
        Ok((sample, record))
    })?;
    let (samples, circuits) = cells.into_iter().unzip();
    Ok(ProtocolOutput {
        protocol: Protocol::MRB,
        width: w,
        layers_per_depth: Protocol::MRB.layers_per_depth(),
        samples,
        circuits,
        pauli_set: Vec::new(),
        pauli_set_sampled: false,
    })
}
