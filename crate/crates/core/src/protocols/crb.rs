use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    binomial_estimate, expect_protocol, run_cells, CircuitRecord, DecaySample, Protocol, ProtocolOutput,
    ProtocolRunSpec,
};
use crate::circgen::{generate_with_rng, ideal_unitary, Circuit, Gate, Layer};
use crate::error::Result;
use crate::qcore::{CMatrix, Pauli, PauliString};
use crate::seeds::{cell_seed, mix, mix_str};
use crate::sim::NoisySimulator;
use crate::twirl::{randomized_compile_with, FinalFrame};

/// Above this width the Pauli set is sampled instead of enumerated.
pub const EXHAUSTIVE_PAULI_WIDTH: usize = 2;
pub const SAMPLED_PAULIS: usize = 20;

/// Paulis to benchmark: all non-identity ones for small widths, otherwise a
/// seeded sample. The flag reports whether sampling was used.
pub fn crb_pauli_set(w: usize, seed: u64) -> (Vec<PauliString>, bool) {
    let total = 1usize << (2 * w);
    if w <= EXHAUSTIVE_PAULI_WIDTH || total - 1 <= SAMPLED_PAULIS {
        return ((1..total).map(|i| PauliString::from_index(i, w)).collect(), false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_str(seed, "CRB/paulis"));
    let mut picked: Vec<usize> = sample(&mut rng, total - 1, SAMPLED_PAULIS)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    picked.sort_unstable();
    (picked.into_iter().map(|i| PauliString::from_index(i, w)).collect(), true)
}

/// Single-qubit layer followed by a density-`xi` two-qubit layer.
fn random_cycle(spec: &ProtocolRunSpec, k: usize) -> Result<Vec<Layer>> {
    let seed = mix(mix_str(spec.seed, "CRB/cycle"), k as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = generate_with_rng(spec.width, 1, 0.0, &spec.topology, seed, &mut rng)?;
    let g = generate_with_rng(spec.width, 1, spec.xi, &spec.topology, seed, &mut rng)?;
    Ok(vec![c.layers[0].clone(), g.layers[0].clone()])
}

/// Gates taking |0⟩ to the +1 eigenstate of each single-qubit factor.
fn eigenstate_prep(p: Pauli) -> Vec<Gate> {
    match p {
        Pauli::I | Pauli::Z => Vec::new(),
        Pauli::X => vec![Gate::H],
        Pauli::Y => vec![Gate::H, Gate::S],
    }
}

/// Build the circuit for `m` cycle repetitions with the eigenstate
/// preparation of `pauli` merged into the first layer's slots.
fn crb_circuit(spec: &ProtocolRunSpec, cycle: &[Layer], m: usize, pauli: &PauliString, seed: u64) -> Result<Circuit> {
    let mut circuit = Circuit::empty(spec.width, spec.topology.clone(), seed);
    for _ in 0..m {
        circuit.layers.extend(cycle.iter().cloned());
    }
    let first = &mut circuit.layers[0];
    for (q, &p) in pauli.0.iter().enumerate() {
        let prep = eigenstate_prep(p);
        if prep.is_empty() {
            continue;
        }
        let op = first
            .ops
            .iter_mut()
            .find(|op| op.qubits == [q])
            .expect("cycle starts with a full single-qubit layer");
        let mut pre = prep;
        pre.append(&mut op.pre);
        op.pre = pre;
    }
    Ok(circuit)
}

/// `Z` on every qubit where `pauli` acts non-trivially.
fn z_support(pauli: &PauliString) -> PauliString {
    PauliString(pauli.0.iter().map(|&p| if p == Pauli::I { Pauli::I } else { Pauli::Z }).collect())
}

/// Per Pauli `P`: prepare its +1 eigenstate, apply `m` twirled repetitions
/// of a random cycle, and record the expectation of the ideally propagated
/// observable.
pub fn run_crb(spec: &ProtocolRunSpec) -> Result<ProtocolOutput> {
    expect_protocol(spec, Protocol::CRB)?;
    let w = spec.width;
    let sim = NoisySimulator::new(w, &spec.noise)?;
    let (paulis, sampled) = crb_pauli_set(w, spec.seed);
    let cycles: Vec<Vec<Layer>> = (0..spec.circuits_per_depth)
        .map(|k| random_cycle(spec, k))
        .collect::<Result<_>>()?;
    let cells = run_cells(spec, |m, k| {
        let seed = cell_seed(spec.seed, "CRB", m, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(paulis.len());
        for (j, pauli) in paulis.iter().enumerate() {
            let base = crb_circuit(spec, &cycles[k], m, pauli, seed)?;
            let compiled = randomized_compile_with(&base, mix(seed, j as u64 + 1), FinalFrame::Track)?;
            let u = ideal_unitary(&compiled.circuit)?;
            let observable: CMatrix = &u * z_support(pauli).matrix() * u.adjoint();
            let end = sim.run(&compiled.circuit)?;
            let exact = (observable * end.matrix()).trace().re.clamp(-1.0, 1.0);
            let value = if spec.shots > 0 {
                2.0 * binomial_estimate((1.0 + exact) / 2.0, spec.shots, &mut rng) - 1.0
            } else {
                exact
            };
            out.push((
                DecaySample {
                    protocol: Protocol::CRB,
                    depth: m,
                    circuit_seed: seed,
                    pauli_label: Some(pauli.clone()),
                    value,
                },
                CircuitRecord {
                    depth: m,
                    index: k,
                    circuit_seed: seed,
                    pauli_label: Some(pauli.clone()),
                    circuit: compiled.circuit,
                    twirl_records: compiled.records,
                    benchmark_layers: vec![0, 1],
                    target: None,
                    purity_after_prep: None,
                    purity_final: None,
                },
            ));
        }
        Ok(out)
    })?;
    let (samples, circuits) = cells.into_iter().flatten().unzip();
    Ok(ProtocolOutput {
        protocol: Protocol::CRB,
        width: w,
        layers_per_depth: Protocol::CRB.layers_per_depth(),
        samples,
        circuits,
        pauli_set: paulis,
        pauli_set_sampled: sampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circgen::{GateOp, Topology};
    use crate::noise::{GateClass, NoiseKind, NoiseModel, NoiseSpec};

    fn spec(w: usize, noise: NoiseModel) -> ProtocolRunSpec {
        ProtocolRunSpec {
            protocol: Protocol::CRB,
            width: w,
            topology: Topology::line(w),
            xi: if w > 1 { 0.75 } else { 0.0 },
            depths: vec![1, 2, 4],
            circuits_per_depth: 2,
            shots: 0,
            noise,
            seed: 3,
        }
    }

    #[test]
    fn pauli_sets() {
        let (p1, s1) = crb_pauli_set(1, 0);
        assert_eq!((p1.len(), s1), (3, false));
        let (p2, _) = crb_pauli_set(2, 0);
        assert_eq!(p2.len(), 15);
        let (p3, s3) = crb_pauli_set(3, 0);
        assert_eq!((p3.len(), s3), (20, true));
        assert!(p3.iter().all(|p| !p.is_identity()));
        assert_eq!(crb_pauli_set(3, 0), crb_pauli_set(3, 0));
    }

    #[test]
    fn prep_makes_eigenstates() {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let u = eigenstate_prep(p).iter().fold(CMatrix::identity(2, 2), |acc, g| g.matrix() * acc);
            let z = Pauli::Z.matrix();
            assert!((&u * z * u.adjoint() - p.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_expectations_are_one() {
        for w in [1, 2] {
            let out = run_crb(&spec(w, NoiseModel::noiseless())).unwrap();
            for s in &out.samples {
                assert!((s.value - 1.0).abs() < 1e-10, "{s:?}");
            }
        }
    }

    #[test]
    fn dephased_z_cycle() {
        // cycle = [z] on one qubit; X and Y decay by √(1−λ)·… per cycle, Z not at all
        let lambda: f64 = 0.19;
        let noise = NoiseModel::noiseless()
            .with(GateClass::OneQubitGate, NoiseSpec::new(NoiseKind::T2, lambda).unwrap())
            .unwrap();
        let s = spec(1, noise.clone());
        let sim = NoisySimulator::new(1, &noise).unwrap();
        let cycle = vec![Layer::new(vec![GateOp::one(Gate::Z, 0)])];
        for (label, want_rate) in [("X", (1.0 - lambda).sqrt()), ("Z", 1.0)] {
            let pauli: PauliString = label.parse().unwrap();
            let mut vals = Vec::new();
            for m in [1, 2, 3] {
                let base = crb_circuit(&s, &cycle, m, &pauli, 0).unwrap();
                let compiled = randomized_compile_with(&base, 9 + m as u64, FinalFrame::Track).unwrap();
                let u = ideal_unitary(&compiled.circuit).unwrap();
                let obs = &u * z_support(&pauli).matrix() * u.adjoint();
                let end = sim.run(&compiled.circuit).unwrap();
                vals.push((obs * end.matrix()).trace().re);
            }
            assert!((vals[1] / vals[0] - want_rate).abs() < 1e-12, "{label} {vals:?}");
            assert!((vals[2] / vals[1] - want_rate).abs() < 1e-12, "{label} {vals:?}");
        }
    }
}
