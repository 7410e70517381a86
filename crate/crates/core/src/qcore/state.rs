use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{CMatrix, HERMITIAN_TOL, PSD_FLOOR, TRACE_TOL};
use crate::error::{Error, Result};

/// An `n`-qubit mixed state.
///
/// Constructed states are Hermitian, unit trace and PSD up to the crate
/// tolerances. Operations never re-project a state; an invariant violation
/// indicates a bug upstream.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: CMatrix,
}

impl DensityMatrix {
    /// Validating constructor.
    pub fn new(n_qubits: usize, data: CMatrix) -> Result<Self> {
        let state = Self::from_matrix_unchecked(n_qubits, data)?;
        state.validate()?;
        Ok(state)
    }

    /// Checks only the shape. Used for outputs of CPTP maps, which are
    /// valid by construction.
    pub(crate) fn from_matrix_unchecked(n_qubits: usize, data: CMatrix) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidInput("a state needs at least one qubit".into()));
        }
        let dim = 1usize << n_qubits;
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: data.nrows(),
            });
        }
        Ok(Self { n_qubits, data })
    }

    /// |0…0⟩⟨0…0|
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis_state(n_qubits, 0)
    }

    /// Computational basis state; `index` has qubit 0 as its most significant bit.
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut data = CMatrix::zeros(dim, dim);
        data[(index % dim, index % dim)] = Complex64::new(1.0, 0.0);
        Self { n_qubits, data }
    }

    /// Basis state from a bitstring such as `"01"` (qubit 0 first).
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let index = parse_bitstring(bits)?;
        Ok(Self::basis_state(bits.len(), index))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let data = CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Self { n_qubits, data }
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalised) amplitude vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "amplitude vector length {dim} is not a power of two"
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidInput("zero amplitude vector".into()));
        }
        let data = CMatrix::from_fn(dim, dim, |i, j| amplitudes[i] * amplitudes[j].conj() / (norm * norm));
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            data,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// Diagonal of ρ in the computational basis (outcome probabilities).
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.data.clone()).eigenvalues.iter().copied().collect()
    }

    pub fn validate(&self) -> Result<()> {
        let herm = super::max_abs(&(&self.data - self.data.adjoint()));
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < PSD_FLOOR {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(())
    }

    /// Reduced state on `keep` (in the given order), tracing out the rest.
    pub fn partial_trace_keep(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let n = self.n_qubits;
        if keep.is_empty() || keep.iter().any(|&q| q >= n) {
            return Err(Error::InvalidInput(format!("bad qubit subset {keep:?}")));
        }
        let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let k = keep.len();
        let sub_dim = 1usize << k;
        let env_dim = 1usize << traced.len();
        let compose = |sub: usize, env: usize| -> usize {
            let mut idx = 0;
            for (t, &q) in keep.iter().enumerate() {
                if (sub >> (k - 1 - t)) & 1 == 1 {
                    idx |= 1 << (n - 1 - q);
                }
            }
            for (t, &q) in traced.iter().enumerate() {
                if (env >> (traced.len() - 1 - t)) & 1 == 1 {
                    idx |= 1 << (n - 1 - q);
                }
            }
            idx
        };
        let mut out = CMatrix::zeros(sub_dim, sub_dim);
        for a in 0..sub_dim {
            for b in 0..sub_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for e in 0..env_dim {
                    acc += self.data[(compose(a, e), compose(b, e))];
                }
                out[(a, b)] = acc;
            }
        }
        DensityMatrix::from_matrix_unchecked(k, out)
    }

    /// ρ ⊗ σ
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            data: self.data.kronecker(&other.data),
        }
    }
}

pub(crate) fn parse_bitstring(bits: &str) -> Result<usize> {
    if bits.is_empty() || bits.len() > 30 {
        return Err(Error::InvalidInput(format!("bad bitstring {bits:?}")));
    }
    bits.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        other => Err(Error::InvalidInput(format!("bad bit {other:?} in {bits:?}"))),
    })
}

pub(crate) fn format_bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if (index >> (n - 1 - q)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_are_valid() {
        DensityMatrix::zero_state(3).validate().unwrap();
        DensityMatrix::maximally_mixed(2).validate().unwrap();
        let s = 0.5f64.sqrt();
        let plus = DensityMatrix::pure(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]).unwrap();
        plus.validate().unwrap();
        assert_eq!(DensityMatrix::from_bitstring("01").unwrap().probabilities(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_matrices() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(2.0, 0.0);
        assert!(DensityMatrix::new(1, m).is_err());
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(matches!(DensityMatrix::new(1, m), Err(Error::InvalidState(_))));
        assert!(DensityMatrix::new(2, CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = DensityMatrix::from_bitstring("1").unwrap();
        let b = DensityMatrix::maximally_mixed(1);
        let ab = a.tensor(&b);
        assert!((ab.partial_trace_keep(&[0]).unwrap().matrix() - a.matrix()).norm() < 1e-12);
        assert!((ab.partial_trace_keep(&[1]).unwrap().matrix() - b.matrix()).norm() < 1e-12);
    }

    #[test]
    fn bitstrings() {
        assert_eq!(parse_bitstring("011").unwrap(), 3);
        assert_eq!(format_bitstring(3, 3), "011");
        assert!(parse_bitstring("0a").is_err());
    }
}
