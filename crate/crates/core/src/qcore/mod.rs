//! Dense complex linear algebra for few-qubit states and channels.
//!
//! Everything here is immutable once built and safe to share across threads.
//! The target scale is at most five qubits, so all representations are dense.

mod channel;
pub(crate) mod kernel;
mod metrics;
mod pauli;
mod ptm;
mod state;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use channel::{apply_channel, embed_on_qubits, pauli_rotation, KrausChannel};
pub use metrics::{purity, tv_distance};
pub use pauli::{Pauli, PauliString};
pub use ptm::{ptm_from_kraus, ptm_from_unitary, PauliTransferMatrix};
pub(crate) use ptm::ptm_from_images;
pub use state::DensityMatrix;
pub(crate) use state::{format_bitstring, parse_bitstring};

pub type CMatrix = DMatrix<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_FLOOR: f64 = -1e-10;
pub const TP_TOL: f64 = 1e-10;

/// `U ≈ e^{iφ} V` for some global phase φ, within `tol` (max-entry norm).
pub fn equal_up_to_phase(u: &CMatrix, v: &CMatrix, tol: f64) -> bool {
    if u.shape() != v.shape() {
        return false;
    }
    // phase from the largest entry of v
    let (mut best, mut idx) = (0.0, (0, 0));
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            let m = v[(i, j)].norm();
            if m > best {
                best = m;
                idx = (i, j);
            }
        }
    }
    if best == 0.0 {
        return max_abs(u) <= tol;
    }
    let ratio = u[idx] / v[idx];
    if (ratio.norm() - 1.0).abs() > tol {
        return false;
    }
    let phase = ratio / ratio.norm();
    (u - v * phase).iter().all(|z| z.norm() <= tol)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
