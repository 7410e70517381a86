use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CMatrix, KrausChannel, PauliString};
use crate::error::{Error, Result};

/// Real `4^n x 4^n` Pauli transfer matrix,
/// `R[a][b] = tr(P_a · ε(P_b)) / 2^n`, in the shared lexicographic basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTransferMatrix {
    n_qubits: usize,
    data: DMatrix<f64>,
}

impl PauliTransferMatrix {
    pub fn new(n_qubits: usize, data: DMatrix<f64>) -> Result<Self> {
        let dim = 1usize << (2 * n_qubits);
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: data.nrows(),
            });
        }
        Ok(Self { n_qubits, data })
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dim = 1usize << (2 * n_qubits);
        Self {
            n_qubits,
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// PTM of `self` followed by `after`.
    pub fn then(&self, after: &PauliTransferMatrix) -> Result<PauliTransferMatrix> {
        if self.n_qubits != after.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: after.n_qubits,
            });
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            data: &after.data * &self.data,
        })
    }

    /// Frobenius norm of everything off the main diagonal.
    pub fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.data.nrows() {
            for j in 0..self.data.ncols() {
                if i != j {
                    acc += self.data[(i, j)].powi(2);
                }
            }
        }
        acc.sqrt()
    }

    /// Entry-wise mean of several PTMs.
    pub fn mean(ptms: &[PauliTransferMatrix]) -> Result<PauliTransferMatrix> {
        let first = ptms
            .first()
            .ok_or_else(|| Error::InvalidInput("cannot average zero PTMs".into()))?;
        let mut acc = DMatrix::zeros(first.data.nrows(), first.data.ncols());
        for p in ptms {
            if p.n_qubits != first.n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: first.n_qubits,
                    actual: p.n_qubits,
                });
            }
            acc += &p.data;
        }
        acc /= ptms.len() as f64;
        Ok(Self {
            n_qubits: first.n_qubits,
            data: acc,
        })
    }
}

/// Builds a PTM from images of the normalised Pauli basis: `image(b)` must
/// return `ε(P_b)` for the `b`-th basis operator.
pub(crate) fn ptm_from_images(n: usize, mut image: impl FnMut(&CMatrix) -> CMatrix) -> PauliTransferMatrix {
    let basis_len = 1usize << (2 * n);
    let norm = (1usize << n) as f64;
    let paulis: Vec<PauliString> = (0..basis_len).map(|i| PauliString::from_index(i, n)).collect();
    let mut data = DMatrix::zeros(basis_len, basis_len);
    for (b, pb) in paulis.iter().enumerate() {
        let out = image(&pb.matrix());
        for (a, pa) in paulis.iter().enumerate() {
            let v: Complex64 = pa.trace_product(&out);
            data[(a, b)] = v.re / norm;
        }
    }
    PauliTransferMatrix { n_qubits: n, data }
}

pub fn ptm_from_kraus(channel: &KrausChannel) -> PauliTransferMatrix {
    ptm_from_images(channel.n_qubits(), |p| channel.apply_to_operator(p))
}

pub fn ptm_from_unitary(u: &CMatrix) -> Result<PauliTransferMatrix> {
    Ok(ptm_from_kraus(&KrausChannel::unitary(u.clone())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{pauli::Pauli, pauli_rotation};

    // Oracle: dense trace formula without the sparse Pauli trick.
    fn brute_ptm(channel: &KrausChannel) -> DMatrix<f64> {
        let n = channel.n_qubits();
        let len = 1usize << (2 * n);
        DMatrix::from_fn(len, len, |a, b| {
            let pa = PauliString::from_index(a, n).matrix();
            let pb = PauliString::from_index(b, n).matrix();
            let mut img = CMatrix::zeros(pb.nrows(), pb.ncols());
            for k in channel.kraus_ops() {
                img += k * &pb * k.adjoint();
            }
            (pa * img).trace().re / (1usize << n) as f64
        })
    }

    #[test]
    fn identity_channel_gives_identity_ptm() {
        let r = ptm_from_kraus(&KrausChannel::identity(2));
        assert!((r.matrix() - DMatrix::<f64>::identity(16, 16)).amax() < 1e-14);
    }

    #[test]
    fn depolarizing_ptm_is_diagonal_shrink() {
        let p = 0.2;
        let mut ops = vec![CMatrix::identity(2, 2) * Complex64::new((1.0 - 3.0 * p / 4.0f64).sqrt(), 0.0)];
        for q in [Pauli::X, Pauli::Y, Pauli::Z] {
            ops.push(q.matrix() * Complex64::new((p / 4.0f64).sqrt(), 0.0));
        }
        let ch = KrausChannel::new(1, ops).unwrap();
        let r = ptm_from_kraus(&ch);
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0 - p, 1.0 - p, 1.0 - p]));
        assert!((r.matrix() - &want).amax() < 1e-14);
        assert!((r.matrix() - brute_ptm(&ch)).amax() < 1e-14);
    }

    #[test]
    fn z_rotation_rotates_xy_block() {
        let theta: f64 = 0.37;
        let u = pauli_rotation(&Pauli::Z.matrix(), theta);
        let ch = KrausChannel::unitary(u).unwrap();
        let r = ptm_from_kraus(&ch);
        let brute = brute_ptm(&ch);
        assert!((r.matrix() - &brute).amax() < 1e-14);
        assert!((r.matrix()[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((r.matrix()[(3, 3)] - 1.0).abs() < 1e-14);
        assert!((r.matrix()[(1, 1)] - theta.cos()).abs() < 1e-14);
        assert!((r.matrix()[(2, 2)] - theta.cos()).abs() < 1e-14);
        assert!((r.matrix()[(2, 1)] - theta.sin()).abs() < 1e-14);
        assert!((r.matrix()[(1, 2)] + theta.sin()).abs() < 1e-14);
    }
}
