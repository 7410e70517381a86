use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Circuit, Gate, GateOp, Layer, Topology};
use crate::error::{Error, Result};

/// Number of cnots for a `w x d` lattice at density `xi` (ties to even).
pub fn target_cnot_count(w: usize, d: usize, xi: f64) -> usize {
    (w as f64 * d as f64 * xi / 2.0).round_ties_even() as usize
}

/// Random circuit of `d` layers on `w` qubits with exactly
/// `round(w·d·xi/2)` cnots placed on topology edges and every other slot
/// filled by a uniformly drawn single-qubit gate.
pub fn generate_random_circuit(w: usize, d: usize, xi: f64, topology: &Topology, seed: u64) -> Result<Circuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_with_rng(w, d, xi, topology, seed, &mut rng)
}

pub(crate) fn generate_with_rng<R: Rng>(
    w: usize,
    d: usize,
    xi: f64,
    topology: &Topology,
    seed: u64,
    rng: &mut R,
) -> Result<Circuit> {
    if w == 0 || d == 0 {
        return Err(Error::InvalidInput("width and depth must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::OutOfRange {
            name: "xi",
            value: xi,
            range: "[0, 1]",
        });
    }
    if topology.n_qubits != w {
        return Err(Error::InvalidInput(format!(
            "topology has {} qubits but width is {w}",
            topology.n_qubits
        )));
    }
    topology.validate()?;
    let alpha = target_cnot_count(w, d, xi);
    let per_layer_max = topology.max_matching();
    if alpha > 0 && topology.edges.is_empty() {
        return Err(Error::Generation(format!(
            "{alpha} cnots requested but the topology has no edges"
        )));
    }
    if alpha > d * per_layer_max {
        return Err(Error::Generation(format!(
            "{alpha} cnots exceed depth {d} x maximum matching {per_layer_max} of the topology"
        )));
    }
    let counts = sample_layer_counts(alpha, d, per_layer_max, rng);

    let mut layers = Vec::with_capacity(d);
    for &c in &counts {
        let matching = topology
            .random_matching(c, rng)
            .ok_or_else(|| Error::Generation(format!("no matching of size {c} in the topology")))?;
        let mut busy = vec![false; w];
        let mut ops = Vec::with_capacity(w);
        for (a, b) in matching {
            busy[a] = true;
            busy[b] = true;
            if rng.random_bool(0.5) {
                ops.push(GateOp::cnot(a, b));
            } else {
                ops.push(GateOp::cnot(b, a));
            }
        }
        for (q, _) in busy.iter().enumerate().filter(|(_, b)| !**b) {
            let g = Gate::ONE_QUBIT[rng.random_range(0..Gate::ONE_QUBIT.len())];
            ops.push(GateOp::one(g, q));
        }
        ops.sort_by_key(|op| op.qubits.iter().copied().min());
        layers.push(Layer::new(ops));
    }
    Ok(Circuit {
        width: w,
        seed,
        topology: topology.clone(),
        layers,
    })
}

/// Uniformly random `(c_1..c_d)` with `Σc = total` and `0 ≤ c_i ≤ cap`.
pub(crate) fn sample_layer_counts<R: Rng>(total: usize, d: usize, cap: usize, rng: &mut R) -> Vec<usize> {
    // ways[i][s]: number of ways layers i..d can hold s cnots
    let mut ways = vec![vec![0.0f64; total + 1]; d + 1];
    ways[d][0] = 1.0;
    for i in (0..d).rev() {
        for s in 0..=total {
            ways[i][s] = (0..=cap.min(s)).map(|c| ways[i + 1][s - c]).sum();
        }
    }
    let mut left = total;
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        let mut u = rng.random::<f64>() * ways[i][left];
        let mut pick = 0;
        for c in 0..=cap.min(left) {
            let wgt = ways[i + 1][left - c];
            if wgt == 0.0 {
                continue;
            }
            pick = c;
            if u < wgt {
                break;
            }
            u -= wgt;
        }
        out.push(pick);
        left -= pick;
    }
    out
}
