use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circgen::Topology;
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::protocols::Protocol;
use crate::tomography::MAX_TOMOGRAPHY_WIDTH;

pub const SCHEMA_VERSION: u32 = 1;

/// Connectivity description in a config file; the qubit count comes from
/// the experiment width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySpec {
    Line,
    Ring,
    Grid { rows: usize, cols: usize },
    Complete,
    Custom { edges: Vec<(usize, usize)> },
}

impl TopologySpec {
    pub fn build(&self, width: usize) -> Result<Topology> {
        let topo = match self {
            TopologySpec::Line => Topology::line(width),
            TopologySpec::Ring => Topology::ring(width),
            TopologySpec::Grid { rows, cols } => {
                if rows * cols != width {
                    return Err(Error::Config(format!(
                        "grid {rows}x{cols} does not have {width} qubits"
                    )));
                }
                Topology::grid(*rows, *cols)
            }
            TopologySpec::Complete => Topology::complete(width),
            TopologySpec::Custom { edges } => Topology::custom(width, edges.clone())?,
        };
        Ok(topo)
    }
}

/// One point of a noise sweep. When `noise` is omitted the model is the
/// preset named by `label` at `strength`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoisePoint {
    pub label: String,
    pub strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
}

impl NoisePoint {
    pub fn preset(label: &str, strength: f64) -> Self {
        Self {
            label: label.to_string(),
            strength,
            noise: None,
        }
    }

    pub fn model(&self) -> Result<NoiseModel> {
        match &self.noise {
            Some(m) => Ok(m.clone()),
            None => NoiseModel::preset(&self.label, self.strength),
        }
    }
}

fn default_depths() -> Vec<usize> {
    vec![2, 4, 8, 16, 32]
}
fn default_k() -> usize {
    20
}
fn default_resamples() -> usize {
    1000
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub width: usize,
    pub topology: TopologySpec,
    pub xi: f64,
    pub protocols: Vec<Protocol>,
    #[serde(default)]
    pub noise_sweep: Vec<NoisePoint>,
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    #[serde(default = "default_k")]
    pub circuits_per_depth: usize,
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

/// The default sweep grid.
pub fn default_strengths() -> Vec<f64> {
    log_grid(1e-4, 1e-1, 7)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: "depolarizing-sweep".into(),
            width: 2,
            topology: TopologySpec::Line,
            xi: 0.75,
            protocols: Protocol::ALL.to_vec(),
            noise_sweep: default_strengths()
                .into_iter()
                .map(|s| NoisePoint::preset("depolarizing", s))
                .collect(),
            depths: default_depths(),
            circuits_per_depth: default_k(),
            shots: 0,
            seed: 1,
            bootstrap_resamples: default_resamples(),
            output_dir: default_output_dir(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn topology(&self) -> Result<Topology> {
        self.topology.build(self.width)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.width == 0 || self.width > MAX_TOMOGRAPHY_WIDTH {
            return Err(Error::Config(format!(
                "width must be in 1..={MAX_TOMOGRAPHY_WIDTH}, got {}",
                self.width
            )));
        }
        if self.protocols.is_empty() {
            return Err(Error::Config("protocol list is empty".into()));
        }
        self.topology()?;
        let mut last: BTreeMap<&str, f64> = BTreeMap::new();
        for point in &self.noise_sweep {
            if !(point.strength > 0.0 && point.strength.is_finite()) {
                return Err(Error::Config(format!(
                    "noise strength {} for {:?} must be positive",
                    point.strength, point.label
                )));
            }
            if let Some(prev) = last.insert(&point.label, point.strength) {
                if point.strength <= prev {
                    return Err(Error::Config(format!(
                        "strengths for {:?} are not strictly increasing",
                        point.label
                    )));
                }
            }
            point.model()?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the compact serialized config.
    pub fn hash(&self) -> Result<String> {
        let canonical = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_and_validates() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
        assert_eq!(cfg.noise_sweep.len(), 7);
        assert!((cfg.noise_sweep[0].strength - 1e-4).abs() < 1e-18);
        assert!((cfg.noise_sweep[6].strength - 1e-1).abs() < 1e-15);
    }

    #[test]
    fn unknown_fields_and_bad_values_rejected() {
        let mut v: serde_json::Value = serde_json::to_value(ExperimentConfig::default()).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.protocols.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.noise_sweep.swap(0, 1);
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.schema_version = 2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let text = r#"{"schema_version":1,"name":"t","width":2,"topology":{"kind":"line"},
            "xi":0.5,"protocols":["DRB"]}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.depths, vec![2, 4, 8, 16, 32]);
        assert_eq!(cfg.circuits_per_depth, 20);
        assert!(cfg.noise_sweep.is_empty());
    }

    #[test]
    fn hash_changes_with_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seed += 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
