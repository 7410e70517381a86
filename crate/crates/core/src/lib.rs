//! Randomized benchmarking of noisy quantum circuits.
//!
//! Direct, mirror and cycle benchmarking run on an exact density-matrix
//! simulator, are fitted to exponential decays and compared against a
//! process-tomography reference computed on the same circuits.

pub mod backend;
pub mod circgen;
pub mod error;
pub mod fitting;
pub mod noise;
pub mod protocols;
pub mod qcore;
pub mod runner;
pub mod seeds;
pub mod sim;
pub mod tomography;
pub mod twirl;

pub use backend::{local_execute, CountsTable, ExecutionBackend, JobRecord, JobStatus, RemoteClient, RemoteConfig};
pub use circgen::{generate_random_circuit, to_openqasm, Circuit, Gate, GateOp, Layer, Topology, TopologyKind};
pub use error::{Error, Result};
pub use fitting::{error_rate_from_p, fit_decay, DecayFitResult, FitOptions};
pub use noise::{GateClass, NoiseKind, NoiseModel, NoiseSpec};
pub use protocols::{run_protocol, DecaySample, Protocol, ProtocolOutput, ProtocolRunSpec};
pub use qcore::{DensityMatrix, KrausChannel, Pauli, PauliString, PauliTransferMatrix};
pub use runner::{run_experiment, ExperimentArchive, ExperimentConfig, NoisePoint, ResultRow};
pub use tomography::{average_gate_fidelity, FidelityReport};
pub use twirl::{randomized_compile, CompiledCircuit, TwirlRecord};
