//! Single- and multi-qubit Pauli operators.
//!
//! Basis ordering is lexicographic per qubit in the order `I, X, Y, Z`, with
//! qubit 0 as the most significant digit. Every module that enumerates the
//! Pauli basis goes through [`PauliString::from_index`] so the ordering is
//! shared.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i & 3]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// (x, z) bits of the symplectic representation.
    pub fn xz(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_xz(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn matrix(self) -> CMatrix {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => CMatrix::from_row_slice(2, 2, &[l, o, o, l]),
            Pauli::X => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            Pauli::Y => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Pauli::Z => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Product `self * other` as (phase, Pauli), phase in {±1, ±i}.
    pub fn mul(self, other: Pauli) -> (Complex64, Pauli) {
        use Pauli::*;
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match (self, other) {
            (I, p) | (p, I) => (one, p),
            (a, b) if a == b => (one, I),
            (X, Y) => (i, Z),
            (Y, X) => (-i, Z),
            (Y, Z) => (i, X),
            (Z, Y) => (-i, X),
            (Z, X) => (i, Y),
            (X, Z) => (-i, Y),
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl TryFrom<char> for Pauli {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidInput(format!("not a Pauli label: {other:?}"))),
        }
    }
}

/// A tensor product of single-qubit Paulis; element `q` acts on qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString(vec![Pauli::I; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Inverse of [`PauliString::index`].
    pub fn from_index(mut index: usize, n: usize) -> Self {
        let mut v = vec![Pauli::I; n];
        for q in (0..n).rev() {
            v[q] = Pauli::from_index(index & 3);
            index >>= 2;
        }
        PauliString(v)
    }

    /// Position in the lexicographic basis (qubit 0 most significant).
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, p| (acc << 2) | p.index())
    }

    /// Dense `2^n x 2^n` matrix (qubit 0 is the leftmost tensor factor).
    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::identity(1, 1);
        for p in &self.0 {
            m = m.kronecker(&p.matrix());
        }
        m
    }

    /// Bit masks (x, z) over basis-state indices, with qubit `q` at bit `n-1-q`.
    pub fn masks(&self) -> (usize, usize) {
        let n = self.0.len();
        let mut x = 0;
        let mut z = 0;
        for (q, p) in self.0.iter().enumerate() {
            let (px, pz) = p.xz();
            let bit = 1usize << (n - 1 - q);
            if px {
                x |= bit;
            }
            if pz {
                z |= bit;
            }
        }
        (x, z)
    }

    /// `tr(P · M)` computed from the sparse structure of `P`.
    pub fn trace_product(&self, m: &CMatrix) -> Complex64 {
        let (x, z) = self.masks();
        let n_y = self.0.iter().filter(|&&p| p == Pauli::Y).count();
        // P = i^{n_y} X^x Z^z, so P[i, i ^ x] = i^{n_y} (-1)^{popcount(i^x & z)}.
        let global = Complex64::new(0.0, 1.0).powu(n_y as u32);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m.nrows() {
            let j = i ^ x;
            let sign = if (j & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += m[(j, i)] * sign;
        }
        acc * global
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidInput("empty Pauli string".into()));
        }
        s.chars().map(Pauli::try_from).collect::<Result<Vec<_>>>().map(PauliString)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;

    mod approx_eq {
        pub fn close(a: num_complex::Complex64, b: num_complex::Complex64) -> bool {
            (a - b).norm() < 1e-12
        }
    }

    #[test]
    fn index_roundtrip_and_ordering() {
        assert_eq!(PauliString::from_index(0, 2).to_string(), "II");
        assert_eq!(PauliString::from_index(1, 2).to_string(), "IX");
        assert_eq!(PauliString::from_index(4, 2).to_string(), "XI");
        assert_eq!(PauliString::from_index(15, 2).to_string(), "ZZ");
        for i in 0..64 {
            assert_eq!(PauliString::from_index(i, 3).index(), i);
        }
    }

    #[test]
    fn sparse_trace_matches_dense() {
        let m = CMatrix::from_fn(4, 4, |i, j| Complex64::new(i as f64 + 0.3, j as f64 - 0.7 * i as f64));
        for idx in 0..16 {
            let p = PauliString::from_index(idx, 2);
            let dense = (p.matrix() * &m).trace();
            assert!(close(dense, p.trace_product(&m)), "{p}");
        }
    }

    #[test]
    fn products() {
        let (ph, p) = Pauli::X.mul(Pauli::Y);
        assert_eq!(p, Pauli::Z);
        let dense = Pauli::X.matrix() * Pauli::Y.matrix();
        assert!((dense - Pauli::Z.matrix() * ph).norm() < 1e-12);
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let (ph, c) = a.mul(b);
                assert!((a.matrix() * b.matrix() - c.matrix() * ph).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
        assert_eq!("xz".parse::<PauliString>().unwrap().to_string(), "XZ");
    }
}
