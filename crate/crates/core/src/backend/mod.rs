//! Execution backends: the exact local simulator and a client for a remote
//! job service.

mod local;
pub mod mock;
mod remote;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circgen::Circuit;
use crate::error::{Error, Result};

pub use local::{local_execute, LocalBackend, LOCAL_MAX_QUBITS};
pub use remote::{
    execute_batch, remote_poll, remote_submit, Exchange, RemoteClient, RemoteConfig, ENDPOINT_VAR, TOKEN_VAR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub max_qubits: usize,
    pub supports_exact_probabilities: bool,
}

/// Outcome weights keyed by bitstring (qubit 0 leftmost). With `shots == 0`
/// the weights are exact probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsTable {
    pub shots: u64,
    pub counts: BTreeMap<String, f64>,
}

impl CountsTable {
    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    /// Normalised outcome distribution over all `2^width` bitstrings.
    pub fn probabilities(&self, width: usize) -> Result<Vec<f64>> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::InvalidInput("empty counts table".into()));
        }
        let mut probs = vec![0.0; 1 << width];
        for (bits, &c) in &self.counts {
            if bits.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    actual: bits.len(),
                });
            }
            probs[crate::qcore::parse_bitstring(bits)?] += c / total;
        }
        Ok(probs)
    }
}

pub trait ExecutionBackend {
    fn capabilities(&self) -> Capabilities;
    fn execute(&mut self, circuit: &Circuit, shots: u64) -> Result<CountsTable>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobStatus {
    #[serde(alias = "queued", alias = "QUEUED")]
    Queued,
    #[serde(alias = "running", alias = "RUNNING")]
    Running,
    #[serde(alias = "done", alias = "DONE")]
    Done,
    #[serde(alias = "failed", alias = "FAILED")]
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub qasm: String,
    pub shots: u64,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<String, u64>>,
}

impl JobRecord {
    /// Counts are present exactly when the job is done and add up to the
    /// requested shots.
    pub fn validate(&self) -> Result<()> {
        match (&self.status, &self.counts) {
            (JobStatus::Done, Some(counts)) => {
                let total: u64 = counts.values().sum();
                if total != self.shots {
                    return Err(Error::InvalidInput(format!(
                        "counts sum to {total} but {} shots were requested",
                        self.shots
                    )));
                }
                Ok(())
            }
            (JobStatus::Done, None) => Err(Error::InvalidInput("finished job carries no counts".into())),
            (_, Some(_)) => Err(Error::InvalidInput(format!("{:?} job carries counts", self.status))),
            (_, None) => Ok(()),
        }
    }
}
