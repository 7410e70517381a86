use thiserror::Error;

/// Errors produced anywhere in the benchmarking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("channel is not trace preserving (max deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("parameter `{name}` = {value} outside allowed range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("circuit width {width} exceeds the supported maximum of {max}")]
    WidthTooLarge { width: usize, max: usize },

    #[error("circuit generation failed: {0}")]
    Generation(String),

    #[error("unsupported gate for twirling: {0}")]
    UnsupportedGate(String),

    #[error("ideal PTM is not invertible")]
    SingularPtm,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("fit did not converge after {iterations} iterations (last step {last_step:.3e}, params A={a:.6}, B={b:.6}, p={p:.6})")]
    FitFailed {
        iterations: usize,
        last_step: f64,
        a: f64,
        b: f64,
        p: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("failed to load archive {path}: {reason}")]
    ArchiveLoad { path: String, reason: String },

    #[error("backend unavailable after {attempts} attempts: {reason}")]
    BackendUnavailable { attempts: usize, reason: String },

    #[error("backend protocol error: {reason} (body: {body})")]
    BackendProtocol { reason: String, body: String },

    #[error("timed out waiting for job {0}")]
    Timeout(String),

    #[error("qasm parse error on line {line}: {message}")]
    QasmParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
