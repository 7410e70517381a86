//! In-place application of small (1- or 2-qubit) matrices to full operators.
//!
//! Qubit `q` of an `n`-qubit register lives at bit `n - 1 - q` of a basis
//! index. `targets[0]` is the most significant qubit of the small matrix.

use num_complex::Complex64;

use super::CMatrix;

fn target_offsets(n: usize, targets: &[usize]) -> (Vec<usize>, usize) {
    let k = targets.len();
    let mut offsets = vec![0usize; 1 << k];
    let mut mask = 0usize;
    for (s, off) in offsets.iter_mut().enumerate() {
        for (t, &q) in targets.iter().enumerate() {
            if (s >> (k - 1 - t)) & 1 == 1 {
                *off |= 1 << (n - 1 - q);
            }
        }
    }
    for &q in targets {
        mask |= 1 << (n - 1 - q);
    }
    (offsets, mask)
}

/// `op <- U_emb · op`.
pub fn left_apply(op: &mut CMatrix, n: usize, u: &CMatrix, targets: &[usize]) {
    let dim = op.nrows();
    let (offsets, mask) = target_offsets(n, targets);
    let ks = offsets.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); ks];
    for base in (0..dim).filter(|b| b & mask == 0) {
        for j in 0..op.ncols() {
            for (s, v) in buf.iter_mut().enumerate() {
                *v = op[(base | offsets[s], j)];
            }
            for s in 0..ks {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, v) in buf.iter().enumerate() {
                    acc += u[(s, t)] * v;
                }
                op[(base | offsets[s], j)] = acc;
            }
        }
    }
}

/// `op <- op · U_emb†`.
pub fn right_apply_adjoint(op: &mut CMatrix, n: usize, u: &CMatrix, targets: &[usize]) {
    let dim = op.ncols();
    let (offsets, mask) = target_offsets(n, targets);
    let ks = offsets.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); ks];
    for base in (0..dim).filter(|b| b & mask == 0) {
        for i in 0..op.nrows() {
            for (s, v) in buf.iter_mut().enumerate() {
                *v = op[(i, base | offsets[s])];
            }
            for s in 0..ks {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, v) in buf.iter().enumerate() {
                    acc += v * u[(s, t)].conj();
                }
                op[(i, base | offsets[s])] = acc;
            }
        }
    }
}

/// `op <- U op U†` on the given targets.
pub fn conjugate(op: &mut CMatrix, n: usize, u: &CMatrix, targets: &[usize]) {
    left_apply(op, n, u, targets);
    right_apply_adjoint(op, n, u, targets);
}

/// `op <- Σ_i K_i op K_i†` on the given targets.
pub fn apply_kraus(op: &mut CMatrix, n: usize, kraus: &[CMatrix], targets: &[usize]) {
    match kraus {
        [] => {}
        [single] => conjugate(op, n, single, targets),
        _ => {
            let mut acc = CMatrix::zeros(op.nrows(), op.ncols());
            for k in kraus {
                let mut term = op.clone();
                conjugate(&mut term, n, k, targets);
                acc += term;
            }
            *op = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::pauli::Pauli;

    fn random_op(dim: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        CMatrix::from_fn(dim, dim, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 33) as f64) / (1u64 << 31) as f64 - 0.5;
            Complex64::new(a, b)
        })
    }

    #[test]
    fn matches_dense_kronecker_embedding() {
        let x = Pauli::X.matrix();
        let y = Pauli::Y.matrix();
        let i2 = Pauli::I.matrix();
        let op = random_op(8, 7);
        // X on qubit 1 of 3 == I ⊗ X ⊗ I
        let dense = i2.kronecker(&x).kronecker(&i2);
        let mut got = op.clone();
        left_apply(&mut got, 3, &x, &[1]);
        assert!((got - &dense * &op).norm() < 1e-12);

        // two-qubit matrix on (2, 0): permuted embedding
        let u = x.kronecker(&y);
        let mut got = op.clone();
        conjugate(&mut got, 3, &u, &[2, 0]);
        // Y on qubit 0, X on qubit 2
        let dense = y.kronecker(&i2).kronecker(&x);
        let want = &dense * &op * dense.adjoint();
        assert!((got - want).norm() < 1e-12);
    }
}
