//! Randomized compiling with Pauli twirls merged into existing gate slots.
//!
//! A Pauli frame is carried through the circuit. At every single-qubit
//! slot the incoming frame is undone and a fresh uniformly random Pauli is
//! applied after the gate. At every cnot slot the incoming frame is undone
//! together with a fresh random Pauli pair merged in front of the cnot,
//! and the pair conjugated through the cnot becomes the new frame. Depth
//! and cnot placement never change.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circgen::{Circuit, Gate, GateOp};
use crate::error::{Error, Result};
use crate::qcore::{Pauli, PauliString};

/// What happens to the frame left at the end of the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FinalFrame {
    /// Slots after which a frame could reach the end receive no twirl, so
    /// the output implements the input unitary exactly.
    #[default]
    Absorb,
    /// Every slot is twirled; the residual frame is returned and must be
    /// accounted for when interpreting measurements.
    Track,
}

/// Twirls of one cnot-bearing layer: `twirl_gates` holds the random Pauli
/// drawn on each qubit (identity where nothing was drawn), `correction`
/// the frame leaving the layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwirlRecord {
    pub layer_index: usize,
    pub twirl_gates: Vec<Pauli>,
    pub correction: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledCircuit {
    pub circuit: Circuit,
    pub records: Vec<TwirlRecord>,
    /// Pauli the compiled circuit applies on top of the original unitary.
    pub final_frame: PauliString,
}

/// `cnot · P · cnot` for a two-qubit Pauli (qubit 0 is the control), with
/// its sign.
pub fn pauli_conjugate_through_cnot(pauli_pair: &PauliString) -> Result<(i8, PauliString)> {
    if pauli_pair.len() != 2 {
        return Err(Error::InvalidInput(format!("{pauli_pair} is not a two-qubit Pauli")));
    }
    let out = cnot_frame(pauli_pair.0[0], pauli_pair.0[1]);
    let out = PauliString(vec![out.0, out.1]);
    let cx = Gate::Cnot.matrix();
    let conj = &cx * pauli_pair.matrix() * &cx;
    let overlap = out.trace_product(&conj).re / 4.0;
    let sign = if overlap > 0.0 { 1 } else { -1 };
    Ok((sign, out))
}

fn cnot_frame(c: Pauli, t: Pauli) -> (Pauli, Pauli) {
    let (xc, zc) = c.xz();
    let (xt, zt) = t.xz();
    (Pauli::from_xz(xc, zc ^ zt), Pauli::from_xz(xt ^ xc, zt))
}

/// Twirled circuit implementing the same unitary up to global phase.
pub fn randomized_compile(circuit: &Circuit, seed: u64) -> Result<(Circuit, Vec<TwirlRecord>)> {
    let out = randomized_compile_with(circuit, seed, FinalFrame::Absorb)?;
    Ok((out.circuit, out.records))
}

pub fn randomized_compile_with(circuit: &Circuit, seed: u64, final_frame: FinalFrame) -> Result<CompiledCircuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    compile_with_chooser(circuit, final_frame, |_, _| Pauli::from_index(rng.random_range(0..4)))
}

/// Compile with twirls chosen by `choose(layer, qubit)`.
pub fn compile_with_chooser(
    circuit: &Circuit,
    final_frame: FinalFrame,
    mut choose: impl FnMut(usize, usize) -> Pauli,
) -> Result<CompiledCircuit> {
    circuit.validate()?;
    let w = circuit.width;
    let d = circuit.depth();
    let pinned = match final_frame {
        FinalFrame::Absorb => frame_reaches_end(circuit),
        FinalFrame::Track => vec![vec![false; w]; d],
    };
    let mut frame = vec![Pauli::I; w];
    let mut out = circuit.clone();
    let mut records = Vec::new();
    for (k, layer) in out.layers.iter_mut().enumerate() {
        let mut drawn = vec![Pauli::I; w];
        for op in layer.ops.iter_mut() {
            if op.is_two_qubit() {
                if op.name != Gate::Cnot {
                    return Err(Error::UnsupportedGate(op.name.to_string()));
                }
                let (c, t) = (op.qubits[0], op.qubits[1]);
                if !pinned[k][c] && !pinned[k][t] {
                    drawn[c] = choose(k, c);
                    drawn[t] = choose(k, t);
                }
                dress_cnot(op, [frame[c], frame[t]], [drawn[c], drawn[t]])?;
                (frame[c], frame[t]) = cnot_frame(drawn[c], drawn[t]);
            } else {
                let q = op.qubits[0];
                if !pinned[k][q] {
                    drawn[q] = choose(k, q);
                }
                merge_frames(op, frame[q], drawn[q]);
                frame[q] = drawn[q];
            }
        }
        if layer.cnot_count() > 0 {
            records.push(TwirlRecord {
                layer_index: k,
                twirl_gates: drawn,
                correction: frame.iter().map(|&p| Gate::from_pauli(p)).collect(),
            });
        }
    }
    let final_frame_string = PauliString(frame);
    debug_assert!(final_frame != FinalFrame::Absorb || final_frame_string.is_identity());
    Ok(CompiledCircuit {
        circuit: out,
        records,
        final_frame: final_frame_string,
    })
}

fn merge_frames(op: &mut GateOp, incoming: Pauli, outgoing: Pauli) {
    if incoming != Pauli::I {
        op.pre.insert(0, Gate::from_pauli(incoming));
    }
    if outgoing != Pauli::I {
        op.post.push(Gate::from_pauli(outgoing));
    }
}

fn pauli_of(gate: Gate) -> Result<Pauli> {
    match gate {
        Gate::Id => Ok(Pauli::I),
        Gate::X => Ok(Pauli::X),
        Gate::Y => Ok(Pauli::Y),
        Gate::Z => Ok(Pauli::Z),
        other => Err(Error::UnsupportedGate(format!("{other} merged into a cnot slot"))),
    }
}

/// Product of two Paulis with the phase dropped.
fn times(a: Pauli, b: Pauli) -> Pauli {
    let (xa, za) = a.xz();
    let (xb, zb) = b.xz();
    Pauli::from_xz(xa ^ xb, za ^ zb)
}

/// Merge `incoming` (undone first) and then `drawn` in front of a cnot.
/// Gates already merged into the slot must be Paulis; those after the cnot
/// commute with the new frame up to sign.
fn dress_cnot(op: &mut GateOp, incoming: [Pauli; 2], drawn: [Pauli; 2]) -> Result<()> {
    let mut front = [Pauli::I; 2];
    for slot in 0..2 {
        let existing = match op.pre.get(slot) {
            Some(&g) => pauli_of(g)?,
            None => Pauli::I,
        };
        if let Some(&g) = op.post.get(slot) {
            pauli_of(g)?;
        }
        front[slot] = times(drawn[slot], times(existing, incoming[slot]));
    }
    op.pre = if front == [Pauli::I; 2] {
        Vec::new()
    } else {
        front.iter().map(|&p| Gate::from_pauli(p)).collect()
    };
    Ok(())
}

/// `out[k][q]`: a Pauli on qubit `q` right after layer `k` can reach the
/// end of the circuit without passing another gate slot.
fn frame_reaches_end(circuit: &Circuit) -> Vec<Vec<bool>> {
    let w = circuit.width;
    let d = circuit.depth();
    let mut out = vec![vec![true; w]; d];
    for k in (0..d.saturating_sub(1)).rev() {
        let next = &circuit.layers[k + 1];
        let after_next = out[k + 1].clone();
        for q in 0..w {
            out[k][q] = next.op_on(q).is_none() && after_next[q];
        }
    }
    out
}
