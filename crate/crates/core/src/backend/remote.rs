use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{Capabilities, CountsTable, ExecutionBackend, JobRecord, JobStatus};
use crate::circgen::{to_openqasm, Circuit};
use crate::error::{Error, Result};

pub const ENDPOINT_VAR: &str = "QUBENCH_ENDPOINT";
pub const TOKEN_VAR: &str = "QUBENCH_TOKEN";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub token: String,
    pub attempts: usize,
    pub initial_backoff: Duration,
    pub poll_interval: Duration,
    /// Upper bound on the whole wait for one job.
    pub timeout: Duration,
    pub max_qubits: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, token: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            token: token.into(),
            attempts: 3,
            initial_backoff: Duration::from_millis(200),
            poll_interval: Duration::from_millis(500),
            timeout: Duration::from_secs(300),
            max_qubits: 32,
        }
    }

    pub fn from_env() -> Result<Self> {
        let get = |name: &str| {
            std::env::var(name).map_err(|_| Error::Config(format!("environment variable {name} is not set")))
        };
        Ok(Self::new(get(ENDPOINT_VAR)?, get(TOKEN_VAR)?))
    }
}

/// One request/response pair as sent over the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub method: String,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_body: Option<String>,
    pub attempt: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    pub response_body: String,
}

#[derive(Serialize)]
struct SubmitRequest<'a> {
    qasm: &'a str,
    shots: u64,
}

#[derive(Deserialize)]
struct SubmitResponse {
    job_id: String,
}

#[derive(Deserialize)]
struct PollResponse {
    status: JobStatus,
    #[serde(default)]
    counts: Option<BTreeMap<String, u64>>,
}

/// Client for the submit/poll job service.
pub struct RemoteClient {
    config: RemoteConfig,
    agent: Agent,
    archive: Vec<Exchange>,
}

impl RemoteClient {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self {
            config,
            agent,
            archive: Vec::new(),
        }
    }

    pub fn from_env() -> Result<Self> {
        Ok(Self::new(RemoteConfig::from_env()?))
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// Every exchange made so far, failed attempts included.
    pub fn archive(&self) -> &[Exchange] {
        &self.archive
    }

    fn jobs_url(&self) -> String {
        format!("{}/jobs", self.config.endpoint)
    }

    /// Send with retries on transport failures and 5xx statuses.
    fn request(&mut self, method: &str, url: &str, body: Option<String>) -> Result<String> {
        let mut last = String::new();
        let auth = format!("Bearer {}", self.config.token);
        for attempt in 1..=self.config.attempts {
            if attempt > 1 {
                std::thread::sleep(self.config.initial_backoff * 2u32.pow(attempt as u32 - 2));
            }
            let sent = match &body {
                Some(b) => self
                    .agent
                    .post(url)
                    .header("Authorization", &auth)
                    .content_type("application/json")
                    .send(b.as_str()),
                None => self.agent.get(url).header("Authorization", &auth).call(),
            };
            let mut exchange = Exchange {
                method: method.to_string(),
                url: url.to_string(),
                request_body: body.clone(),
                attempt,
                status: None,
                response_body: String::new(),
            };
            match sent {
                Err(e) => {
                    last = e.to_string();
                    exchange.response_body = last.clone();
                    self.archive.push(exchange);
                }
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    exchange.status = Some(status);
                    exchange.response_body = text.clone();
                    self.archive.push(exchange);
                    if status >= 500 {
                        last = format!("HTTP {status}");
                        continue;
                    }
                    if !(200..300).contains(&status) {
                        return Err(Error::BackendProtocol {
                            reason: format!("HTTP {status}"),
                            body: text,
                        });
                    }
                    return Ok(text);
                }
            }
        }
        Err(Error::BackendUnavailable {
            attempts: self.config.attempts,
            reason: last,
        })
    }

    pub fn submit(&mut self, circuit: &Circuit, shots: u64) -> Result<JobRecord> {
        if shots == 0 {
            return Err(Error::InvalidInput("remote execution needs at least one shot".into()));
        }
        let qasm = to_openqasm(circuit);
        let body = serde_json::to_string(&SubmitRequest { qasm: &qasm, shots })?;
        let url = self.jobs_url();
        let text = self.request("POST", &url, Some(body))?;
        let parsed: SubmitResponse = serde_json::from_str(&text).map_err(|e| Error::BackendProtocol {
            reason: format!("malformed submit response: {e}"),
            body: text.clone(),
        })?;
        Ok(JobRecord {
            job_id: parsed.job_id,
            qasm,
            shots,
            status: JobStatus::Queued,
            counts: None,
        })
    }

    /// Refresh `job` with the service's current view of it.
    pub fn poll(&mut self, job: &JobRecord) -> Result<JobRecord> {
        let url = format!("{}/{}", self.jobs_url(), job.job_id);
        let text = self.request("GET", &url, None)?;
        let malformed = |reason: String| Error::BackendProtocol {
            reason,
            body: text.clone(),
        };
        let parsed: PollResponse =
            serde_json::from_str(&text).map_err(|e| malformed(format!("malformed poll response: {e}")))?;
        let updated = JobRecord {
            status: parsed.status,
            counts: parsed.counts,
            ..job.clone()
        };
        updated.validate().map_err(|e| malformed(e.to_string()))?;
        Ok(updated)
    }

    /// Poll until the job finishes or the configured timeout elapses.
    pub fn wait(&mut self, job: JobRecord) -> Result<JobRecord> {
        let start = Instant::now();
        let mut job = job;
        loop {
            job = self.poll(&job)?;
            if matches!(job.status, JobStatus::Done | JobStatus::Failed) {
                return Ok(job);
            }
            if start.elapsed() + self.config.poll_interval > self.config.timeout {
                return Err(Error::Timeout(job.job_id));
            }
            std::thread::sleep(self.config.poll_interval);
        }
    }
}

impl ExecutionBackend for RemoteClient {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_qubits: self.config.max_qubits,
            supports_exact_probabilities: false,
        }
    }

    fn execute(&mut self, circuit: &Circuit, shots: u64) -> Result<CountsTable> {
        let job = self.submit(circuit, shots)?;
        let done = self.wait(job)?;
        match (done.status, done.counts) {
            (JobStatus::Done, Some(counts)) => Ok(CountsTable {
                shots,
                counts: counts.into_iter().map(|(k, v)| (k, v as f64)).collect(),
            }),
            _ => Err(Error::BackendProtocol {
                reason: format!("job {} failed", done.job_id),
                body: String::new(),
            }),
        }
    }
}

/// Submit one job with a client built from `endpoint` and `token`.
pub fn remote_submit(endpoint: &str, token: &str, circuit: &Circuit, shots: u64) -> Result<JobRecord> {
    RemoteClient::new(RemoteConfig::new(endpoint, token)).submit(circuit, shots)
}

/// Fetch the current state of `job`.
pub fn remote_poll(endpoint: &str, token: &str, job: &JobRecord) -> Result<JobRecord> {
    RemoteClient::new(RemoteConfig::new(endpoint, token)).poll(job)
}

/// Run circuits remotely with at most `jobs` in flight. Each worker owns its
/// own client; results come back in input order together with every
/// exchange, so finished jobs survive failures of others.
pub fn execute_batch(
    config: &RemoteConfig,
    circuits: &[Circuit],
    shots: u64,
    jobs: usize,
) -> Result<Vec<(Result<JobRecord>, Vec<Exchange>)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(pool.install(|| {
        circuits
            .par_iter()
            .map(|c| {
                let mut client = RemoteClient::new(config.clone());
                let result = client.submit(c, shots).and_then(|job| client.wait(job));
                (result, client.archive)
            })
            .collect()
    }))
}
