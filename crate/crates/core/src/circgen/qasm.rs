//! OpenQASM 2.0 export and a minimal parser for the same subset.
//!
//! Layers are separated by `barrier q;` so the parser can rebuild them.
//! Merged single-qubit gates are written as separate lines.

use std::fmt::Write;

use super::{Circuit, Gate, GateOp, Layer, Topology};
use crate::error::{Error, Result};

pub fn to_openqasm(circuit: &Circuit) -> String {
    let w = circuit.width;
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{w}];");
    let _ = writeln!(out, "creg c[{w}];");
    for (i, layer) in circuit.layers.iter().enumerate() {
        if i > 0 {
            out.push_str("barrier q;\n");
        }
        for op in &layer.ops {
            for (g, qubits) in op.timed_gates() {
                let args: Vec<String> = qubits.iter().map(|q| format!("q[{q}]")).collect();
                let _ = writeln!(out, "{} {};", g.qasm_name(), args.join(","));
            }
        }
    }
    out.push_str("measure q -> c;\n");
    out
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::QasmParse {
        line,
        message: message.into(),
    }
}

fn parse_register(arg: &str, name: &str, line: usize) -> Result<usize> {
    let inner = arg
        .strip_prefix(name)
        .and_then(|s| s.strip_prefix('['))
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err(line, format!("expected {name}[k], got {arg:?}")))?;
    inner
        .parse()
        .map_err(|_| err(line, format!("bad index in {arg:?}")))
}

/// Cnot slot absorbing the single-qubit slots already placed on its qubits.
fn dress_cnot(layer: &mut Layer, control: usize, target: usize) -> std::result::Result<GateOp, String> {
    let mut op = GateOp::cnot(control, target);
    let mut pre = [Gate::Id, Gate::Id];
    let mut dressed = false;
    for (slot, q) in [control, target].into_iter().enumerate() {
        if let Some(i) = layer.ops.iter().position(|o| o.qubits == [q]) {
            let single = layer.ops.remove(i);
            if !single.pre.is_empty() || !single.post.is_empty() {
                return Err(format!("more than one gate before cx on q[{q}]"));
            }
            pre[slot] = single.name;
            dressed = true;
        }
    }
    if dressed {
        op.pre = pre.to_vec();
    }
    Ok(op)
}

fn merge_single(layer: &mut Layer, gate: Gate, q: usize) -> std::result::Result<(), String> {
    match layer.ops.iter_mut().find(|op| op.qubits.contains(&q)) {
        Some(op) if op.is_two_qubit() => {
            let slot = op.qubits.iter().position(|&p| p == q).expect("qubit is on this slot");
            if op.post.is_empty() {
                op.post = vec![Gate::Id, Gate::Id];
            }
            if op.post[slot] != Gate::Id {
                return Err(format!("more than one gate after cx on q[{q}]"));
            }
            op.post[slot] = gate;
        }
        Some(op) => op.post.push(gate),
        None => layer.ops.push(GateOp::one(gate, q)),
    }
    Ok(())
}

/// Parses programs produced by [`to_openqasm`]. Consecutive single-qubit
/// gates on one qubit within a layer are merged into one slot, and single
/// gates next to a cnot are merged into the cnot slot. The topology is
/// rebuilt from the cnot pairs that appear.
pub fn parse_openqasm(text: &str) -> Result<Circuit> {
    let mut width: Option<usize> = None;
    let mut layers: Vec<Layer> = vec![Layer::default()];
    let mut edges = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split("//").next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let stmt = line
            .strip_suffix(';')
            .ok_or_else(|| err(line_no, "missing ';'"))?
            .trim();
        let (head, rest) = stmt.split_once(char::is_whitespace).unwrap_or((stmt, ""));
        let rest = rest.trim();
        match head {
            "OPENQASM" => {
                if rest != "2.0" {
                    return Err(err(line_no, format!("unsupported version {rest}")));
                }
                saw_header = true;
            }
            "include" => {}
            "qreg" => width = Some(parse_register(rest, "q", line_no)?),
            "creg" => {
                parse_register(rest, "c", line_no)?;
            }
            "barrier" => layers.push(Layer::default()),
            "measure" => {}
            name => {
                if !saw_header {
                    return Err(err(line_no, "missing OPENQASM header"));
                }
                let w = width.ok_or_else(|| err(line_no, "gate before qreg"))?;
                let gate = Gate::from_name(name).map_err(|_| err(line_no, format!("unsupported gate {name}")))?;
                let qubits = rest
                    .split(',')
                    .map(|a| parse_register(a.trim(), "q", line_no))
                    .collect::<Result<Vec<_>>>()?;
                if qubits.len() != gate.arity() || qubits.iter().any(|&q| q >= w) {
                    return Err(err(line_no, format!("bad operands for {name}")));
                }
                let layer = layers.last_mut().expect("at least one layer");
                if gate == Gate::Cnot {
                    edges.push((qubits[0], qubits[1]));
                    let op = dress_cnot(layer, qubits[0], qubits[1]).map_err(|m| err(line_no, m))?;
                    layer.ops.push(op);
                } else {
                    merge_single(layer, gate, qubits[0]).map_err(|m| err(line_no, m))?;
                }
            }
        }
    }
    let width = width.ok_or_else(|| err(0, "no qreg declared"))?;
    if layers.len() == 1 && layers[0].ops.is_empty() {
        layers.clear();
    }
    let circuit = Circuit {
        width,
        seed: 0,
        topology: Topology::custom(width, edges).map_err(|e| err(0, e.to_string()))?,
        layers,
    };
    circuit.validate().map_err(|e| err(0, e.to_string()))?;
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circgen::generate_random_circuit;

    #[test]
    fn empty_circuit() {
        let q = to_openqasm(&Circuit::empty(1, Topology::line(1), 0));
        assert_eq!(
            q,
            "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[1];\ncreg c[1];\nmeasure q -> c;\n"
        );
    }

    #[test]
    fn gate_lines_in_order() {
        let c = Circuit {
            width: 2,
            seed: 0,
            topology: Topology::line(2),
            layers: vec![
                Layer::new(vec![GateOp::one(Gate::H, 0)]),
                Layer::new(vec![GateOp::cnot(0, 1)]),
            ],
        };
        let q = to_openqasm(&c);
        let h = q.find("h q[0];").unwrap();
        let cx = q.find("cx q[0],q[1];").unwrap();
        assert!(h < cx);
    }

    #[test]
    fn roundtrip_generated() {
        let c = generate_random_circuit(3, 5, 0.5, &Topology::line(3), 42).unwrap();
        let back = parse_openqasm(&to_openqasm(&c)).unwrap();
        assert_eq!(back.gate_sequence(), c.gate_sequence());
        assert_eq!(back.depth(), c.depth());
    }

    #[test]
    fn roundtrip_twirled() {
        let c = generate_random_circuit(3, 6, 0.5, &Topology::line(3), 9).unwrap();
        let tw = crate::twirl::randomized_compile_with(&c, 4, crate::twirl::FinalFrame::Track)
            .unwrap()
            .circuit;
        let back = parse_openqasm(&to_openqasm(&tw)).unwrap();
        assert_eq!(back.gate_sequence(), tw.gate_sequence());
        assert_eq!(back.depth(), tw.depth());
        let same = crate::qcore::equal_up_to_phase(
            &crate::circgen::ideal_unitary(&back).unwrap(),
            &crate::circgen::ideal_unitary(&tw).unwrap(),
            1e-10,
        );
        assert!(same);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_openqasm("OPENQASM 2.0;\nqreg q[1];\nrx(0.1) q[0];\n").is_err());
        assert!(parse_openqasm("OPENQASM 2.0;\nqreg q[1];\nh q[3];\n").is_err());
        assert!(matches!(
            parse_openqasm("OPENQASM 2.0;\nqreg q[1];\nh q[0]\n"),
            Err(Error::QasmParse { line: 3, .. })
        ));
    }
}
