//! Error channels and the per-gate-class noise model.
//!
//! Strengths are raw channel parameters: `γ` for amplitude damping, `λ` for
//! dephasing, the rotation angle `θ` for coherent errors and `p` for
//! depolarizing. Noise is applied after the ideal gate.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{pauli_rotation, CMatrix, KrausChannel, Pauli, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NoiseKind {
    T1,
    T2,
    Coherent1Q,
    Coherent2Q,
    Depolarizing,
}

impl NoiseKind {
    pub fn label(self) -> &'static str {
        match self {
            NoiseKind::T1 => "t1",
            NoiseKind::T2 => "t2",
            NoiseKind::Coherent1Q => "coherent1q",
            NoiseKind::Coherent2Q => "coherent2q",
            NoiseKind::Depolarizing => "depolarizing",
        }
    }

    fn strength_range(self) -> (f64, f64, &'static str) {
        match self {
            NoiseKind::Coherent1Q | NoiseKind::Coherent2Q => (0.0, PI, "[0, pi]"),
            _ => (0.0, 1.0, "[0, 1]"),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateClass {
    OneQubitGate,
    TwoQubitGate,
    Idle,
    StatePrep,
    Measurement,
}

impl GateClass {
    /// Number of qubits the attached channel acts on.
    pub fn arity(self) -> usize {
        match self {
            GateClass::TwoQubitGate => 2,
            _ => 1,
        }
    }
}

/// One error source with its strength.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub strength: f64,
    /// Rotation generator for coherent kinds; `None` means the default
    /// (`Z` for one qubit, `ZZ` for two).
    pub axis: Option<PauliString>,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, strength: f64) -> Result<Self> {
        let spec = Self {
            kind,
            strength,
            axis: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_axis(kind: NoiseKind, strength: f64, axis: PauliString) -> Result<Self> {
        let spec = Self {
            kind,
            strength,
            axis: Some(axis),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi, range) = self.kind.strength_range();
        if !self.strength.is_finite() || self.strength < lo || self.strength > hi {
            return Err(Error::OutOfRange {
                name: "noise strength",
                value: self.strength,
                range,
            });
        }
        if let Some(axis) = &self.axis {
            let want = match self.kind {
                NoiseKind::Coherent1Q => 1,
                NoiseKind::Coherent2Q => 2,
                other => {
                    return Err(Error::InvalidInput(format!("{other} noise takes no axis")));
                }
            };
            if axis.len() != want || axis.is_identity() {
                return Err(Error::InvalidInput(format!(
                    "axis {axis} is not a non-identity {want}-qubit Pauli"
                )));
            }
        }
        Ok(())
    }

    /// The channel this spec attaches to a gate of the given class.
    ///
    /// Single-qubit error sources on a two-qubit gate act independently on
    /// both qubits.
    pub fn channel_for(&self, class: GateClass) -> Result<KrausChannel> {
        self.validate()?;
        let local = match (self.kind, class.arity()) {
            (NoiseKind::Coherent2Q, 1) => {
                return Err(Error::InvalidInput(format!(
                    "coherent2q noise cannot attach to single-qubit class {class:?}"
                )))
            }
            (NoiseKind::Coherent2Q, _) => {
                let axis = self
                    .axis
                    .clone()
                    .unwrap_or_else(|| PauliString(vec![Pauli::Z, Pauli::Z]));
                return coherent_error_channel(self.strength, &axis);
            }
            (NoiseKind::Depolarizing, n) => return depolarizing_channel(self.strength, n),
            (NoiseKind::T1, _) => amplitude_damping_channel(self.strength)?,
            (NoiseKind::T2, _) => phase_damping_channel(self.strength)?,
            (NoiseKind::Coherent1Q, _) => {
                let axis = self.axis.clone().unwrap_or_else(|| PauliString(vec![Pauli::Z]));
                coherent_error_channel(self.strength, &axis)?
            }
        };
        Ok(if class.arity() == 2 {
            local.tensor(&local)
        } else {
            local
        })
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// T1 relaxation toward |0⟩.
pub fn amplitude_damping_channel(gamma: f64) -> Result<KrausChannel> {
    check_unit("gamma", gamma)?;
    let k0 = CMatrix::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real((1.0 - gamma).sqrt())]);
    let k1 = CMatrix::from_row_slice(2, 2, &[real(0.0), real(gamma.sqrt()), real(0.0), real(0.0)]);
    KrausChannel::new(1, vec![k0, k1])
}

/// Pure dephasing; populations are untouched.
pub fn phase_damping_channel(lambda: f64) -> Result<KrausChannel> {
    check_unit("lambda", lambda)?;
    let k0 = CMatrix::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real((1.0 - lambda).sqrt())]);
    let k1 = CMatrix::from_row_slice(2, 2, &[real(0.0), real(0.0), real(0.0), real(lambda.sqrt())]);
    KrausChannel::new(1, vec![k0, k1])
}

/// `ρ ↦ (1−p)ρ + p·I/2^n` as a Pauli Kraus set.
pub fn depolarizing_channel(p: f64, n_qubits: usize) -> Result<KrausChannel> {
    check_unit("p", p)?;
    if !(1..=2).contains(&n_qubits) {
        return Err(Error::InvalidInput(format!(
            "depolarizing channel supports 1 or 2 qubits, got {n_qubits}"
        )));
    }
    let len = 1usize << (2 * n_qubits);
    let other = (p / len as f64).sqrt();
    let ident = (1.0 - p * (len - 1) as f64 / len as f64).sqrt();
    let ops = (0..len)
        .map(|i| {
            let w = if i == 0 { ident } else { other };
            PauliString::from_index(i, n_qubits).matrix() * real(w)
        })
        .filter(|m| crate::qcore::max_abs(m) > 0.0)
        .collect();
    KrausChannel::new(n_qubits, ops)
}

/// Unitary over-rotation `exp(−iθ/2·P)` about the Pauli `axis`.
pub fn coherent_error_channel(theta: f64, axis: &PauliString) -> Result<KrausChannel> {
    if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            range: "[0, pi]",
        });
    }
    if axis.is_empty() || axis.len() > 2 || axis.is_identity() {
        return Err(Error::InvalidInput(format!("invalid coherent-error axis {axis}")));
    }
    KrausChannel::unitary(pauli_rotation(&axis.matrix(), theta))
}

/// `γ = 1 − exp(−t_gate/T1)`
pub fn gamma_from_t1(gate_time: f64, t1: f64) -> Result<f64> {
    if !(gate_time >= 0.0 && t1 > 0.0) {
        return Err(Error::InvalidInput("gate time must be >= 0 and T1 > 0".into()));
    }
    Ok(1.0 - (-gate_time / t1).exp())
}

/// `λ = 1 − exp(−2·t_gate/T2)`, treating T2 as pure dephasing.
pub fn lambda_from_t2(gate_time: f64, t2: f64) -> Result<f64> {
    if !(gate_time >= 0.0 && t2 > 0.0) {
        return Err(Error::InvalidInput("gate time must be >= 0 and T2 > 0".into()));
    }
    Ok(1.0 - (-2.0 * gate_time / t2).exp())
}

/// Serialized form of one entry of a [`NoiseModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRecord {
    pub gate_class: GateClass,
    pub kind: NoiseKind,
    pub strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<PauliString>,
}

/// Error sources attached to each gate class, applied in listed order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<NoiseRecord>", into = "Vec<NoiseRecord>")]
pub struct NoiseModel {
    per_gate_class: BTreeMap<GateClass, Vec<NoiseSpec>>,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<NoiseRecord>) -> Result<Self> {
        let mut model = Self::default();
        for r in records {
            let spec = NoiseSpec {
                kind: r.kind,
                strength: r.strength,
                axis: r.axis,
            };
            model.add(r.gate_class, spec)?;
        }
        Ok(model)
    }

    pub fn records(&self) -> Vec<NoiseRecord> {
        self.per_gate_class
            .iter()
            .flat_map(|(class, specs)| {
                specs.iter().map(move |s| NoiseRecord {
                    gate_class: *class,
                    kind: s.kind,
                    strength: s.strength,
                    axis: s.axis.clone(),
                })
            })
            .collect()
    }

    /// Attach `spec` to `class`, after anything already attached there.
    pub fn add(&mut self, class: GateClass, spec: NoiseSpec) -> Result<()> {
        spec.validate()?;
        if spec.kind == NoiseKind::Coherent2Q && class.arity() != 2 {
            return Err(Error::InvalidInput(format!(
                "coherent2q noise cannot attach to {class:?}"
            )));
        }
        self.per_gate_class.entry(class).or_default().push(spec);
        Ok(())
    }

    pub fn with(mut self, class: GateClass, spec: NoiseSpec) -> Result<Self> {
        self.add(class, spec)?;
        Ok(self)
    }

    pub fn is_noiseless(&self) -> bool {
        self.per_gate_class
            .values()
            .flatten()
            .all(|s| s.strength == 0.0)
    }

    pub fn specs(&self, class: GateClass) -> &[NoiseSpec] {
        self.per_gate_class.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_class(&self, class: GateClass) -> bool {
        !self.specs(class).is_empty()
    }

    /// Distinct error kinds present, in a stable order.
    pub fn kinds(&self) -> Vec<NoiseKind> {
        let mut kinds: Vec<NoiseKind> = self.per_gate_class.values().flatten().map(|s| s.kind).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }

    /// The channels for `class` in application order, with identities dropped.
    pub fn channels(&self, class: GateClass) -> Vec<KrausChannel> {
        self.specs(class)
            .iter()
            .filter(|s| s.strength > 0.0)
            .map(|s| s.channel_for(class).expect("noise specs are validated on insertion"))
            .collect()
    }

    /// Preset models: `depolarizing`, `t1`, `t2`, `coherent1q`, `coherent2q`
    /// or any `+`-joined combination (e.g. `t1+t2`), all at one strength.
    ///
    /// Each kind attaches to both gate classes, except `coherent2q` which
    /// only attaches to two-qubit gates.
    pub fn preset(name: &str, strength: f64) -> Result<Self> {
        let mut model = Self::default();
        for part in name.split('+') {
            let kind = parse_kind(part.trim())?;
            let spec = NoiseSpec::new(kind, strength)?;
            if kind != NoiseKind::Coherent2Q {
                model.add(GateClass::OneQubitGate, spec.clone())?;
            }
            model.add(GateClass::TwoQubitGate, spec)?;
        }
        Ok(model)
    }

    /// Same-kind sum of several presets with individual strengths.
    pub fn combine(parts: &[(&str, f64)]) -> Result<Self> {
        let mut model = Self::default();
        for (name, strength) in parts {
            for r in Self::preset(name, *strength)?.records() {
                model.add(
                    r.gate_class,
                    NoiseSpec {
                        kind: r.kind,
                        strength: r.strength,
                        axis: r.axis,
                    },
                )?;
            }
        }
        Ok(model)
    }
}

pub fn parse_kind(label: &str) -> Result<NoiseKind> {
    match label.to_ascii_lowercase().as_str() {
        "t1" => Ok(NoiseKind::T1),
        "t2" => Ok(NoiseKind::T2),
        "coherent1q" | "coherent" => Ok(NoiseKind::Coherent1Q),
        "coherent2q" => Ok(NoiseKind::Coherent2Q),
        "depolarizing" | "depol" => Ok(NoiseKind::Depolarizing),
        other => Err(Error::InvalidInput(format!("unknown noise kind {other:?}"))),
    }
}

impl TryFrom<Vec<NoiseRecord>> for NoiseModel {
    type Error = Error;

    fn try_from(records: Vec<NoiseRecord>) -> Result<Self> {
        Self::from_records(records)
    }
}

impl From<NoiseModel> for Vec<NoiseRecord> {
    fn from(model: NoiseModel) -> Self {
        model.records()
    }
}

/// Composition, in listed order, of every channel attached to `class`.
pub fn build_gate_noise(model: &NoiseModel, class: GateClass) -> KrausChannel {
    model
        .channels(class)
        .into_iter()
        .fold(KrausChannel::identity(class.arity()), |acc, ch| {
            acc.then(&ch).expect("channels of one class share an arity")
        })
}
