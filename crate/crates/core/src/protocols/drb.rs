use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    binomial_estimate, expect_protocol, run_cells, survival_probability, CircuitRecord, DecaySample, Protocol,
    ProtocolOutput, ProtocolRunSpec,
};
use crate::circgen::{dagger_circuit, generate_with_rng, Circuit, Gate, GateOp, Layer, Topology};
use crate::error::Result;
use crate::qcore::purity;
use crate::seeds::cell_seed;
use crate::sim::NoisySimulator;

/// `w + 2` random layers of `h`, `s` and edge cnots: a cheap random
/// stabilizer state preparation from |0…0⟩.
pub fn stabilizer_prep_layers<R: Rng>(w: usize, topology: &Topology, rng: &mut R) -> Vec<Layer> {
    (0..w + 2)
        .map(|_| {
            let mut edges = topology.edges.clone();
            edges.shuffle(rng);
            let mut busy = vec![false; w];
            let mut ops = Vec::with_capacity(w);
            for (a, b) in edges {
                if !busy[a] && !busy[b] && rng.random_bool(0.5) {
                    busy[a] = true;
                    busy[b] = true;
                    ops.push(if rng.random_bool(0.5) {
                        GateOp::cnot(a, b)
                    } else {
                        GateOp::cnot(b, a)
                    });
                }
            }
            for q in (0..w).filter(|&q| !busy[q]) {
                ops.push(GateOp::one(if rng.random_bool(0.5) { Gate::H } else { Gate::S }, q));
            }
            ops.sort_by_key(|op| op.qubits.iter().copied().min());
            Layer::new(ops)
        })
        .collect()
}

/// Stabilizer preparation, a depth-`m` random core at density `xi`, then the
/// inverse of both. The sample value is the probability of returning to
/// all zeros.
pub fn run_drb(spec: &ProtocolRunSpec) -> Result<ProtocolOutput> {
    expect_protocol(spec, Protocol::DRB)?;
    let w = spec.width;
    let sim = NoisySimulator::new(w, &spec.noise)?;
    let zeros = "0".repeat(w);
    let cells = run_cells(spec, |m, k| {
        let seed = cell_seed(spec.seed, "DRB", m, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prep = stabilizer_prep_layers(w, &spec.topology, &mut rng);
        let core = generate_with_rng(w, m, spec.xi, &spec.topology, seed, &mut rng)?;
        let mut forward = Circuit::empty(w, spec.topology.clone(), seed);
        forward.layers = prep;
        let n_prep = forward.layers.len();
        forward.layers.extend(core.layers);
        let circuit = forward.then(&dagger_circuit(&forward))?;

        let start = sim.prepare();
        let after_prep = sim.evolve(&start, &circuit.layers[..n_prep])?;
        let end = sim.before_readout(sim.evolve(&after_prep, &circuit.layers[n_prep..])?);
        let exact = survival_probability(&end, &zeros)?;
        let value = if spec.shots > 0 {
            binomial_estimate(exact, spec.shots, &mut rng)
        } else {
            exact
        };
        let record = CircuitRecord {
            depth: m,
            index: k,
            circuit_seed: seed,
            pauli_label: None,
            benchmark_layers: (n_prep..n_prep + 2 * m).collect(),
            circuit,
            twirl_records: Vec::new(),
            target: Some(zeros.clone()),
            purity_after_prep: Some(purity(&after_prep)),
            purity_final: Some(purity(&end)),
        };
        let sample = DecaySample {
            protocol: Protocol::DRB,
            depth: m,
            circuit_seed: seed,
            pauli_label: None,
            value,
        };
        Ok((sample, record))
    })?;
    let (samples, circuits) = cells.into_iter().unzip();
    Ok(ProtocolOutput {
        protocol: Protocol::DRB,
        width: w,
        layers_per_depth: Protocol::DRB.layers_per_depth(),
        samples,
        circuits,
        pauli_set: Vec::new(),
        pauli_set_sampled: false,
    })
}
