//! Exact channel extraction and fidelity measures used as the reference
//! against which protocol estimates are judged.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circgen::{apply_layer_unitary, ideal_unitary, Circuit, Layer};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::qcore::{ptm_from_images, ptm_from_unitary, CMatrix, DensityMatrix, PauliTransferMatrix};
use crate::seeds::mix;
use crate::sim::NoisySimulator;

pub const MAX_TOMOGRAPHY_WIDTH: usize = 4;
pub const MAX_HAAR_WIDTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub entanglement_fidelity: f64,
    pub average_gate_fidelity: f64,
    pub average_error_rate: f64,
    pub dimension: usize,
}

impl FidelityReport {
    pub fn from_entanglement_fidelity(fe: f64, dimension: usize) -> Self {
        let d = dimension as f64;
        let fe = fe.clamp(0.0, 1.0);
        let avg = (d * fe + 1.0) / (d + 1.0);
        Self {
            entanglement_fidelity: fe,
            average_gate_fidelity: avg,
            average_error_rate: 1.0 - avg,
            dimension,
        }
    }

    /// `1 − F_e`
    pub fn process_infidelity(&self) -> f64 {
        1.0 - self.entanglement_fidelity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub n_states: usize,
}

impl HaarEstimate {
    /// `|mean − value| ≤ k·SEM`, with a floating-point floor for channels
    /// whose fidelity does not depend on the input state.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= (k * self.standard_error).max(1e-12)
    }
}

fn check_width(w: usize, max: usize) -> Result<()> {
    if w == 0 || w > max {
        return Err(Error::WidthTooLarge { width: w, max });
    }
    Ok(())
}

/// PTM of the noisy gate sequence `layers` (no preparation or readout noise).
pub fn layers_channel_ptm(width: usize, layers: &[Layer], noise: &NoiseModel) -> Result<PauliTransferMatrix> {
    check_width(width, MAX_TOMOGRAPHY_WIDTH)?;
    let sim = NoisySimulator::new(width, noise)?;
    Ok(ptm_from_images(width, |p| {
        let mut op = p.clone();
        sim.apply_layers(&mut op, layers);
        op
    }))
}

/// Exact PTM of the circuit's composite noisy channel.
pub fn circuit_channel_ptm(circuit: &Circuit, noise: &NoiseModel) -> Result<PauliTransferMatrix> {
    layers_channel_ptm(circuit.width, &circuit.layers, noise)
}

/// PTM of the noiseless gate sequence.
pub fn ideal_layers_ptm(width: usize, layers: &[Layer]) -> Result<PauliTransferMatrix> {
    check_width(width, MAX_TOMOGRAPHY_WIDTH)?;
    let dim = 1usize << width;
    let mut u = CMatrix::identity(dim, dim);
    for layer in layers {
        apply_layer_unitary(&mut u, width, layer);
    }
    ptm_from_unitary(&u)
}

fn inverse_of_ideal(ideal: &PauliTransferMatrix) -> Result<DMatrix<f64>> {
    let r = ideal.matrix();
    let rt = r.transpose();
    let n = r.nrows();
    if (&rt * r - DMatrix::<f64>::identity(n, n)).amax() < 1e-9 {
        return Ok(rt);
    }
    r.clone().try_inverse().ok_or(Error::SingularPtm)
}

/// `F_e = tr(R_ideal⁻¹ · R_actual) / 4^w`, clamped to [0, 1].
pub fn entanglement_fidelity(actual: &PauliTransferMatrix, ideal: &PauliTransferMatrix) -> Result<f64> {
    if actual.n_qubits() != ideal.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: ideal.n_qubits(),
            actual: actual.n_qubits(),
        });
    }
    let inv = inverse_of_ideal(ideal)?;
    let len = actual.matrix().nrows() as f64;
    Ok(((inv * actual.matrix()).trace() / len).clamp(0.0, 1.0))
}

pub fn average_gate_fidelity(actual: &PauliTransferMatrix, ideal: &PauliTransferMatrix) -> Result<FidelityReport> {
    let fe = entanglement_fidelity(actual, ideal)?;
    Ok(FidelityReport::from_entanglement_fidelity(fe, 1 << actual.n_qubits()))
}

/// Fidelity of the noisy layers to their ideal unitary.
pub fn layers_fidelity(width: usize, layers: &[Layer], noise: &NoiseModel) -> Result<FidelityReport> {
    let actual = layers_channel_ptm(width, layers, noise)?;
    let ideal = ideal_layers_ptm(width, layers)?;
    average_gate_fidelity(&actual, &ideal)
}

pub fn circuit_fidelity(circuit: &Circuit, noise: &NoiseModel) -> Result<FidelityReport> {
    layers_fidelity(circuit.width, &circuit.layers, noise)
}

/// Monte Carlo estimate of `∫dψ ⟨ψ|U† ε(ψ) U|ψ⟩` over Haar-random states.
pub fn haar_average_fidelity_mc(circuit: &Circuit, noise: &NoiseModel, n_states: usize, seed: u64) -> Result<HaarEstimate> {
    check_width(circuit.width, MAX_HAAR_WIDTH)?;
    if n_states < 100 {
        return Err(Error::OutOfRange {
            name: "n_states",
            value: n_states as f64,
            range: ">= 100",
        });
    }
    let w = circuit.width;
    let dim = 1usize << w;
    let u = ideal_unitary(circuit)?;
    let sim = NoisySimulator::new(w, noise)?;
    let samples: Vec<f64> = (0..n_states)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, i as u64));
            let amps: Vec<Complex64> = (0..dim)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect();
            let psi = DensityMatrix::pure(&amps).expect("gaussian vector is nonzero");
            let out = sim.evolve(&psi, &circuit.layers).expect("width checked");
            let target = &u * psi.matrix() * u.adjoint();
            (target * out.matrix()).trace().re
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(HaarEstimate {
        mean,
        standard_error: (var / n).sqrt(),
        n_states,
    })
}
