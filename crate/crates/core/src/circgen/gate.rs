use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{CMatrix, Pauli};

/// The native gate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Id,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Cnot,
}

impl Gate {
    /// Single-qubit gates the generator draws from.
    pub const ONE_QUBIT: [Gate; 9] = [
        Gate::Id,
        Gate::X,
        Gate::Y,
        Gate::Z,
        Gate::H,
        Gate::S,
        Gate::Sdg,
        Gate::T,
        Gate::Tdg,
    ];

    pub fn arity(self) -> usize {
        if self == Gate::Cnot {
            2
        } else {
            1
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::Id => "id",
            Gate::X => "x",
            Gate::Y => "y",
            Gate::Z => "z",
            Gate::H => "h",
            Gate::S => "s",
            Gate::Sdg => "sdg",
            Gate::T => "t",
            Gate::Tdg => "tdg",
            Gate::Cnot => "cnot",
        }
    }

    pub fn qasm_name(self) -> &'static str {
        match self {
            Gate::Cnot => "cx",
            other => other.name(),
        }
    }

    pub fn from_name(name: &str) -> Result<Gate> {
        Ok(match name {
            "id" => Gate::Id,
            "x" => Gate::X,
            "y" => Gate::Y,
            "z" => Gate::Z,
            "h" => Gate::H,
            "s" => Gate::S,
            "sdg" => Gate::Sdg,
            "t" => Gate::T,
            "tdg" => Gate::Tdg,
            "cnot" | "cx" => Gate::Cnot,
            other => return Err(Error::UnsupportedGate(other.to_string())),
        })
    }

    pub fn inverse(self) -> Gate {
        match self {
            Gate::S => Gate::Sdg,
            Gate::Sdg => Gate::S,
            Gate::T => Gate::Tdg,
            Gate::Tdg => Gate::T,
            other => other,
        }
    }

    pub fn is_pauli(self) -> bool {
        matches!(self, Gate::Id | Gate::X | Gate::Y | Gate::Z)
    }

    pub fn from_pauli(p: Pauli) -> Gate {
        match p {
            Pauli::I => Gate::Id,
            Pauli::X => Gate::X,
            Pauli::Y => Gate::Y,
            Pauli::Z => Gate::Z,
        }
    }

    /// Unitary; for `cnot` the first qubit is the control.
    pub fn matrix(self) -> CMatrix {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let w = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        match self {
            Gate::Id => Pauli::I.matrix(),
            Gate::X => Pauli::X.matrix(),
            Gate::Y => Pauli::Y.matrix(),
            Gate::Z => Pauli::Z.matrix(),
            Gate::H => CMatrix::from_row_slice(2, 2, &[r, r, r, -r]),
            Gate::S => CMatrix::from_row_slice(2, 2, &[l, o, o, i]),
            Gate::Sdg => CMatrix::from_row_slice(2, 2, &[l, o, o, -i]),
            Gate::T => CMatrix::from_row_slice(2, 2, &[l, o, o, w]),
            Gate::Tdg => CMatrix::from_row_slice(2, 2, &[l, o, o, w.conj()]),
            Gate::Cnot => CMatrix::from_row_slice(
                4,
                4,
                &[l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o],
            ),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One physical gate slot.
///
/// A single-qubit slot may carry extra single-qubit gates merged into it
/// (`pre` runs before `name`, `post` after); the slot is still executed as
/// one physical gate. On a two-qubit slot `pre` and `post` are either empty
/// or hold exactly one gate per qubit, in the order of `qubits`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateOp {
    pub name: Gate,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pre: Vec<Gate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub post: Vec<Gate>,
}

impl GateOp {
    pub fn one(name: Gate, q: usize) -> Self {
        Self {
            name,
            qubits: vec![q],
            pre: Vec::new(),
            post: Vec::new(),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            name: Gate::Cnot,
            qubits: vec![control, target],
            pre: Vec::new(),
            post: Vec::new(),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.name.arity() == 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.len() != self.name.arity() {
            return Err(Error::InvalidInput(format!(
                "{} expects {} qubit(s), got {:?}",
                self.name,
                self.name.arity(),
                self.qubits
            )));
        }
        if self.is_two_qubit() {
            if self.qubits[0] == self.qubits[1] {
                return Err(Error::InvalidInput(format!("cnot on repeated qubit {}", self.qubits[0])));
            }
            if [&self.pre, &self.post].iter().any(|g| !g.is_empty() && g.len() != 2) {
                return Err(Error::InvalidInput(
                    "two-qubit slots carry one merged gate per qubit".into(),
                ));
            }
        }
        if self.pre.iter().chain(&self.post).any(|g| g.arity() != 1) {
            return Err(Error::InvalidInput("merged gates must be single-qubit".into()));
        }
        Ok(())
    }

    fn sequence(&self) -> impl Iterator<Item = Gate> + '_ {
        self.pre.iter().copied().chain(std::iter::once(self.name)).chain(self.post.iter().copied())
    }

    /// Every gate of the slot with the qubits it acts on, in time order.
    pub fn timed_gates(&self) -> Vec<(Gate, Vec<usize>)> {
        if !self.is_two_qubit() {
            return self.sequence().map(|g| (g, self.qubits.clone())).collect();
        }
        let around = |gates: &[Gate]| -> Vec<(Gate, Vec<usize>)> {
            gates.iter().zip(&self.qubits).map(|(&g, &q)| (g, vec![q])).collect()
        };
        let mut out = around(&self.pre);
        out.push((self.name, self.qubits.clone()));
        out.extend(around(&self.post));
        out
    }

    /// Unitary of the whole slot on its own qubits.
    pub fn unitary(&self) -> CMatrix {
        if self.is_two_qubit() {
            let merged = |gates: &[Gate]| match gates {
                [a, b] => a.matrix().kronecker(&b.matrix()),
                _ => CMatrix::identity(4, 4),
            };
            return merged(&self.post) * self.name.matrix() * merged(&self.pre);
        }
        self.sequence().fold(CMatrix::identity(2, 2), |acc, g| g.matrix() * acc)
    }

    /// Slot implementing the inverse unitary.
    pub fn inverse(&self) -> GateOp {
        let invert = |gates: &[Gate]| -> Vec<Gate> {
            if self.is_two_qubit() {
                gates.iter().map(|g| g.inverse()).collect()
            } else {
                gates.iter().rev().map(|g| g.inverse()).collect()
            }
        };
        GateOp {
            name: self.name.inverse(),
            qubits: self.qubits.clone(),
            pre: invert(&self.post),
            post: invert(&self.pre),
        }
    }
}
