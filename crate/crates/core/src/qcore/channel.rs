use num_complex::Complex64;

use super::{kernel, CMatrix, DensityMatrix, TP_TOL};
use crate::error::{Error, Result};

/// A CPTP map in Kraus form, `ρ ↦ Σ_i K_i ρ K_i†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    n_qubits: usize,
    kraus_ops: Vec<CMatrix>,
}

impl KrausChannel {
    /// Validating constructor: shapes and `Σ K†K = I` within tolerance.
    /// Exactly-zero operators are dropped.
    pub fn new(n_qubits: usize, kraus_ops: Vec<CMatrix>) -> Result<Self> {
        if n_qubits == 0 || kraus_ops.is_empty() {
            return Err(Error::InvalidInput("a channel needs ≥1 qubit and ≥1 Kraus operator".into()));
        }
        let dim = 1usize << n_qubits;
        for k in &kraus_ops {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: k.nrows(),
                });
            }
        }
        let kraus_ops: Vec<CMatrix> = kraus_ops.into_iter().filter(|k| super::max_abs(k) > 0.0).collect();
        if kraus_ops.is_empty() {
            return Err(Error::NotTracePreserving(1.0));
        }
        let channel = Self { n_qubits, kraus_ops };
        let dev = channel.trace_preservation_error();
        if dev > TP_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(channel)
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            kraus_ops: vec![CMatrix::identity(dim, dim)],
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        let dim = u.nrows();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidInput(format!("unitary dimension {dim} is not 2^n")));
        }
        Self::new(dim.trailing_zeros() as usize, vec![u])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus_ops
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// `max |Σ K†K − I|`
    pub fn trace_preservation_error(&self) -> f64 {
        let dim = self.dim();
        let mut acc = CMatrix::zeros(dim, dim);
        for k in &self.kraus_ops {
            acc += k.adjoint() * k;
        }
        super::max_abs(&(acc - CMatrix::identity(dim, dim)))
    }

    /// True when this is the identity map up to a global phase on a single Kraus operator.
    pub fn is_identity(&self) -> bool {
        if self.kraus_ops.len() != 1 {
            return false;
        }
        let k = &self.kraus_ops[0];
        let phase = k[(0, 0)];
        if (phase.norm() - 1.0).abs() > 1e-14 {
            return false;
        }
        let dim = self.dim();
        super::max_abs(&(k - CMatrix::identity(dim, dim) * phase)) < 1e-14
    }

    /// The map `self` followed by `after`.
    pub fn then(&self, after: &KrausChannel) -> Result<KrausChannel> {
        if self.n_qubits != after.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: after.n_qubits,
            });
        }
        if self.is_identity() {
            return Ok(after.clone());
        }
        if after.is_identity() {
            return Ok(self.clone());
        }
        let mut ops = Vec::with_capacity(self.kraus_ops.len() * after.kraus_ops.len());
        for b in &after.kraus_ops {
            for a in &self.kraus_ops {
                let k = b * a;
                if super::max_abs(&k) > 0.0 {
                    ops.push(k);
                }
            }
        }
        Ok(KrausChannel {
            n_qubits: self.n_qubits,
            kraus_ops: ops,
        })
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let mut ops = Vec::with_capacity(self.kraus_ops.len() * other.kraus_ops.len());
        for a in &self.kraus_ops {
            for b in &other.kraus_ops {
                ops.push(a.kronecker(b));
            }
        }
        KrausChannel {
            n_qubits: self.n_qubits + other.n_qubits,
            kraus_ops: ops,
        }
    }

    /// Lift to an `n_total`-qubit channel acting on `targets` (in order) and
    /// as the identity elsewhere.
    pub fn embed_on_qubits(&self, targets: &[usize], n_total: usize) -> Result<KrausChannel> {
        check_targets(targets, n_total)?;
        if targets.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: targets.len(),
            });
        }
        let dim = 1usize << n_total;
        let ops = self
            .kraus_ops
            .iter()
            .map(|k| {
                let mut full = CMatrix::identity(dim, dim);
                kernel::left_apply(&mut full, n_total, k, targets);
                full
            })
            .collect();
        Ok(KrausChannel {
            n_qubits: n_total,
            kraus_ops: ops,
        })
    }

    /// Applies the map to an arbitrary operator (not only states); used for
    /// Pauli-basis propagation.
    pub fn apply_to_operator(&self, op: &CMatrix) -> CMatrix {
        let mut out = op.clone();
        let targets: Vec<usize> = (0..self.n_qubits).collect();
        kernel::apply_kraus(&mut out, self.n_qubits, &self.kraus_ops, &targets);
        out
    }

    /// Applies the channel in place to `targets` of an `n`-qubit operator.
    pub(crate) fn apply_local(&self, op: &mut CMatrix, n: usize, targets: &[usize]) {
        if self.is_identity() {
            return;
        }
        kernel::apply_kraus(op, n, &self.kraus_ops, targets);
    }
}

/// `Σ_i K_i ρ K_i†`.
pub fn apply_channel(state: &DensityMatrix, channel: &KrausChannel) -> Result<DensityMatrix> {
    if state.n_qubits() != channel.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: channel.n_qubits(),
            actual: state.n_qubits(),
        });
    }
    DensityMatrix::from_matrix_unchecked(state.n_qubits(), channel.apply_to_operator(state.matrix()))
}

/// Free-function form of [`KrausChannel::embed_on_qubits`].
pub fn embed_on_qubits(channel: &KrausChannel, targets: &[usize], n_total: usize) -> Result<KrausChannel> {
    channel.embed_on_qubits(targets, n_total)
}

pub(crate) fn check_targets(targets: &[usize], n_total: usize) -> Result<()> {
    for (i, &q) in targets.iter().enumerate() {
        if q >= n_total {
            return Err(Error::InvalidInput(format!("qubit {q} out of range for {n_total} qubits")));
        }
        if targets[..i].contains(&q) {
            return Err(Error::InvalidInput(format!("duplicate target qubit {q}")));
        }
    }
    Ok(())
}

/// `exp(−i θ/2 · P)` for a Hermitian, involutory `P`.
pub fn pauli_rotation(p: &CMatrix, theta: f64) -> CMatrix {
    let dim = p.nrows();
    CMatrix::identity(dim, dim) * Complex64::new((theta / 2.0).cos(), 0.0)
        - p * Complex64::new(0.0, (theta / 2.0).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::pauli::{Pauli, PauliString};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn amp_damp(g: f64) -> KrausChannel {
        let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - g).sqrt())]);
        let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(g.sqrt()), c(0.0), c(0.0)]);
        KrausChannel::new(1, vec![k0, k1]).unwrap()
    }

    #[test]
    fn identity_channel_leaves_state() {
        let rho = DensityMatrix::zero_state(1);
        let out = apply_channel(&rho, &KrausChannel::identity(1)).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn full_amplitude_damping_resets() {
        let rho = DensityMatrix::from_bitstring("1").unwrap();
        let out = apply_channel(&rho, &amp_damp(1.0)).unwrap();
        assert!((out.matrix() - DensityMatrix::zero_state(1).matrix()).norm() < 1e-15);
    }

    #[test]
    fn dephasing_of_plus_matches_brute_force_kraus_sum() {
        let lam: f64 = 0.5;
        let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - lam).sqrt())]);
        let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(lam.sqrt())]);
        let ch = KrausChannel::new(1, vec![k0.clone(), k1.clone()]).unwrap();
        let s = 0.5f64.sqrt();
        let plus = DensityMatrix::pure(&[c(s), c(s)]).unwrap();
        let out = apply_channel(&plus, &ch).unwrap();
        // brute-force oracle: explicit sum of K ρ K†
        let brute = &k0 * plus.matrix() * k0.adjoint() + &k1 * plus.matrix() * k1.adjoint();
        assert!((out.matrix() - &brute).norm() < 1e-15);
        assert!((out.matrix()[(0, 1)].re - 0.5 * (1.0 - lam).sqrt()).abs() < 1e-15);
        assert!((out.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_tp_and_mismatch() {
        let k = CMatrix::identity(2, 2) * c(0.5);
        assert!(matches!(KrausChannel::new(1, vec![k]), Err(Error::NotTracePreserving(_))));
        let rho = DensityMatrix::zero_state(2);
        assert!(matches!(
            apply_channel(&rho, &KrausChannel::identity(1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn embedding_identity_and_x_on_qubit_one() {
        let id = KrausChannel::identity(1).embed_on_qubits(&[0], 2).unwrap();
        assert!((&id.kraus_ops()[0] - CMatrix::identity(4, 4)).norm() < 1e-15);

        let x = KrausChannel::unitary(Pauli::X.matrix()).unwrap();
        let x1 = x.embed_on_qubits(&[1], 2).unwrap();
        let out = apply_channel(&DensityMatrix::from_bitstring("00").unwrap(), &x1).unwrap();
        assert_eq!(out, DensityMatrix::from_bitstring("01").unwrap());
    }

    #[test]
    fn embedding_rejects_bad_targets() {
        let x = KrausChannel::unitary(Pauli::X.matrix()).unwrap();
        assert!(x.embed_on_qubits(&[2], 2).is_err());
        let cx = KrausChannel::identity(2);
        assert!(cx.embed_on_qubits(&[1, 1], 3).is_err());
    }

    #[test]
    fn embedded_damping_acts_locally_partial_trace_oracle() {
        let ad = amp_damp(0.3);
        let s = 0.5f64.sqrt();
        let q0 = DensityMatrix::pure(&[c(0.6), Complex64::new(0.0, 0.8)]).unwrap();
        let q1 = DensityMatrix::pure(&[c(s), c(s)]).unwrap();
        let q2 = DensityMatrix::from_bitstring("1").unwrap();
        let full = q0.tensor(&q1).tensor(&q2);
        let out = apply_channel(&full, &ad.embed_on_qubits(&[0], 3).unwrap()).unwrap();
        let want0 = apply_channel(&q0, &ad).unwrap();
        assert!((out.partial_trace_keep(&[0]).unwrap().matrix() - want0.matrix()).norm() < 1e-12);
        assert!((out.partial_trace_keep(&[1]).unwrap().matrix() - q1.matrix()).norm() < 1e-12);
        assert!((out.partial_trace_keep(&[2]).unwrap().matrix() - q2.matrix()).norm() < 1e-12);
        out.validate().unwrap();
    }

    #[test]
    fn rotation_about_z_by_pi_maps_plus_to_minus() {
        let u = pauli_rotation(&PauliString(vec![Pauli::Z]).matrix(), std::f64::consts::PI);
        let s = 0.5f64.sqrt();
        let plus = DensityMatrix::pure(&[c(s), c(s)]).unwrap();
        let out = apply_channel(&plus, &KrausChannel::unitary(u).unwrap()).unwrap();
        let minus = DensityMatrix::pure(&[c(s), c(-s)]).unwrap();
        assert!((out.matrix() - minus.matrix()).norm() < 1e-15);
    }
}
