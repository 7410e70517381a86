use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::circgen::Layer;
use crate::error::{Error, Result};
use crate::fitting::{fit_decay, DecayFitResult, FitOptions};
use crate::noise::NoiseModel;
use crate::protocols::{run_protocol, Protocol, ProtocolOutput, ProtocolRunSpec};
use crate::seeds::mix_str;
use crate::tomography::layers_fidelity;

pub const RESULTS_FILE: &str = "results.csv";
pub const ARCHIVE_FILE: &str = "archive.json";
pub const CSV_COLUMNS: [&str; 10] = [
    "protocol",
    "noise_kind",
    "strength",
    "r_estimate",
    "r_ci_low",
    "r_ci_high",
    "r_tomography",
    "n_circuits",
    "n_depths",
    "config_hash",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub protocol: Protocol,
    pub noise_kind: String,
    pub strength: f64,
    pub r_estimate: Option<f64>,
    pub r_ci_low: Option<f64>,
    pub r_ci_high: Option<f64>,
    pub r_tomography: Option<f64>,
    pub n_circuits: usize,
    pub n_depths: usize,
    pub config_hash: String,
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Seeds of the circuits behind both the estimate and the reference.
    pub circuit_seeds: Vec<u64>,
}

/// Everything produced for one (noise point, protocol) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub protocol: Protocol,
    pub noise_kind: String,
    pub strength: f64,
    pub noise: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<ProtocolOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<DecayFitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentArchive {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub created: String,
    pub rows: Vec<ResultRow>,
    pub points: Vec<PointRecord>,
}

impl ExperimentArchive {
    pub fn load(path: &Path) -> Result<Self> {
        let fail = |reason: String| Error::ArchiveLoad {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        let archive: ExperimentArchive = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        let hash = archive.config.hash().map_err(|e| fail(e.to_string()))?;
        if hash != archive.config_hash {
            return Err(fail(format!(
                "config hash {} does not match archived {}",
                hash, archive.config_hash
            )));
        }
        if let Some(row) = archive.rows.iter().find(|r| r.config_hash != hash) {
            return Err(fail(format!("row for {} carries a foreign config hash", row.protocol)));
        }
        Ok(archive)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn protocol_spec(cfg: &ExperimentConfig, protocol: Protocol, noise: NoiseModel) -> Result<ProtocolRunSpec> {
    Ok(ProtocolRunSpec {
        protocol,
        width: cfg.width,
        topology: cfg.topology()?,
        xi: cfg.xi,
        depths: cfg.depths.clone(),
        circuits_per_depth: cfg.circuits_per_depth,
        shots: cfg.shots,
        noise,
        seed: cfg.seed,
    })
}

pub(crate) fn fit_options(cfg: &ExperimentConfig, protocol: Protocol) -> FitOptions {
    FitOptions::for_protocol(protocol, cfg.width)
        .with_resamples(cfg.bootstrap_resamples)
        .with_seed(mix_str(cfg.seed, &format!("bootstrap/{protocol}")))
}

/// Process infidelity of each distinct layer under `noise`.
#[derive(Debug, Default)]
pub struct LayerInfidelityCache {
    width: usize,
    values: HashMap<Layer, f64>,
}

impl LayerInfidelityCache {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            values: HashMap::new(),
        }
    }

    fn fill<'a>(&mut self, layers: impl Iterator<Item = &'a Layer>, noise: &NoiseModel) -> Result<()> {
        let mut seen = HashSet::new();
        let missing: Vec<&Layer> = layers
            .filter(|l| !self.values.contains_key(*l) && seen.insert(*l))
            .collect();
        let w = self.width;
        let computed: Vec<(Layer, f64)> = missing
            .into_par_iter()
            .map(|l| {
                let report = layers_fidelity(w, std::slice::from_ref(l), noise)?;
                Ok((l.clone(), report.process_infidelity()))
            })
            .collect::<Result<_>>()?;
        self.values.extend(computed);
        Ok(())
    }

    fn get(&self, layer: &Layer) -> f64 {
        self.values[layer]
    }
}

/// Mean per-layer process infidelity over the benchmarked layers of every
/// circuit the protocol ran.
pub fn tomography_reference(output: &ProtocolOutput, noise: &NoiseModel, cache: &mut LayerInfidelityCache) -> Result<f64> {
    let layers = output
        .circuits
        .iter()
        .flat_map(|rec| rec.benchmark_layers.iter().map(move |&i| &rec.circuit.layers[i]));
    cache.fill(layers, noise)?;
    let per_circuit: Vec<f64> = output
        .circuits
        .iter()
        .filter(|rec| !rec.benchmark_layers.is_empty())
        .map(|rec| {
            rec.benchmark_layers
                .iter()
                .map(|&i| cache.get(&rec.circuit.layers[i]))
                .sum::<f64>()
                / rec.benchmark_layers.len() as f64
        })
        .collect();
    if per_circuit.is_empty() {
        return Err(Error::InvalidInput("no benchmarked layers to reference".into()));
    }
    Ok(per_circuit.iter().sum::<f64>() / per_circuit.len() as f64)
}

fn circuit_seeds(output: &ProtocolOutput) -> Vec<u64> {
    output
        .circuits
        .iter()
        .map(|c| c.circuit_seed)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn row_from(
    cfg: &ExperimentConfig,
    point: &PointRecord,
    r_tomography: Option<f64>,
    hash: &str,
    timestamp: &str,
) -> ResultRow {
    let seeds = point.output.as_ref().map(circuit_seeds).unwrap_or_default();
    ResultRow {
        protocol: point.protocol,
        noise_kind: point.noise_kind.clone(),
        strength: point.strength,
        r_estimate: point.fit.as_ref().map(|f| f.r),
        r_ci_low: point.fit.as_ref().map(|f| f.r_ci_low),
        r_ci_high: point.fit.as_ref().map(|f| f.r_ci_high),
        r_tomography,
        n_circuits: seeds.len(),
        n_depths: cfg.depths.len(),
        config_hash: hash.to_string(),
        timestamp: timestamp.to_string(),
        failure: point.failure.clone(),
        circuit_seeds: seeds,
    }
}

/// Run every protocol at every noise point, fit, and attach the
/// tomography reference computed on the same circuits.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentArchive> {
    cfg.validate()?;
    let hash = cfg.hash()?;
    let created = now();
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for np in &cfg.noise_sweep {
        let noise = np.model()?;
        let mut cache = LayerInfidelityCache::new(cfg.width);
        for &protocol in &cfg.protocols {
            let mut point = PointRecord {
                protocol,
                noise_kind: np.label.clone(),
                strength: np.strength,
                noise: noise.clone(),
                output: None,
                fit: None,
                failure: None,
            };
            let mut reference = None;
            match protocol_spec(cfg, protocol, noise.clone()).and_then(|s| run_protocol(&s)) {
                Ok(output) => {
                    match tomography_reference(&output, &noise, &mut cache) {
                        Ok(r) => reference = Some(r),
                        Err(e) => point.failure = Some(format!("tomography: {e}")),
                    }
                    match fit_decay(&output.samples, &fit_options(cfg, protocol)) {
                        Ok(fit) => point.fit = Some(fit),
                        Err(e) => point.failure = Some(format!("fit: {e}")),
                    }
                    point.output = Some(output);
                }
                Err(e) => point.failure = Some(format!("protocol: {e}")),
            }
            rows.push(row_from(cfg, &point, reference, &hash, &created));
            points.push(point);
        }
    }
    Ok(ExperimentArchive {
        config: cfg.clone(),
        config_hash: hash,
        created,
        rows,
        points,
    })
}

/// Re-fit the archived samples, keeping the stored tomography references.
pub fn refit_archive(archive: &ExperimentArchive, bootstrap_resamples: Option<usize>) -> Vec<ResultRow> {
    let mut cfg = archive.config.clone();
    if let Some(n) = bootstrap_resamples {
        cfg.bootstrap_resamples = n;
    }
    archive
        .points
        .iter()
        .zip(&archive.rows)
        .map(|(point, old)| {
            let mut point = point.clone();
            if let Some(output) = &point.output {
                match fit_decay(&output.samples, &fit_options(&cfg, point.protocol)) {
                    Ok(fit) => {
                        point.fit = Some(fit);
                        point.failure = None;
                    }
                    Err(e) => {
                        point.fit = None;
                        point.failure = Some(format!("fit: {e}"));
                    }
                }
            }
            row_from(&archive.config, &point, old.r_tomography, &archive.config_hash, &old.timestamp)
        })
        .collect()
}

pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.protocol.label().to_string(),
            r.noise_kind.clone(),
            r.strength.to_string(),
            opt(r.r_estimate),
            opt(r.r_ci_low),
            opt(r.r_ci_high),
            opt(r.r_tomography),
            r.n_circuits.to_string(),
            r.n_depths.to_string(),
            r.config_hash.clone(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Write `results.csv` and `archive.json` into `dir`.
pub fn write_outputs(archive: &ExperimentArchive, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(RESULTS_FILE);
    let archive_path = dir.join(ARCHIVE_FILE);
    std::fs::write(&csv_path, results_csv(&archive.rows)?)?;
    archive.save(&archive_path)?;
    Ok((csv_path, archive_path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityRow {
    pub noise_kind: String,
    pub strength: f64,
    pub depth: usize,
    pub circuit_index: usize,
    pub circuit_seed: u64,
    pub purity_after_prep: f64,
    pub purity_final: f64,
}

fn purity_rows(label: &str, strength: f64, output: &ProtocolOutput) -> Vec<PurityRow> {
    output
        .circuits
        .iter()
        .filter_map(|c| {
            Some(PurityRow {
                noise_kind: label.to_string(),
                strength,
                depth: c.depth,
                circuit_index: c.index,
                circuit_seed: c.circuit_seed,
                purity_after_prep: c.purity_after_prep?,
                purity_final: c.purity_final?,
            })
        })
        .collect()
}

/// Purity after the stabilizer preparation and at the end of every direct
/// benchmarking circuit, for each noise point of the sweep.
pub fn purity_diagnostic(cfg: &ExperimentConfig) -> Result<Vec<PurityRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for np in &cfg.noise_sweep {
        let spec = protocol_spec(cfg, Protocol::DRB, np.model()?)?;
        rows.extend(purity_rows(&np.label, np.strength, &run_protocol(&spec)?));
    }
    Ok(rows)
}

/// Purity rows recovered from archived direct-benchmarking circuits.
pub fn archived_purity(archive: &ExperimentArchive) -> Vec<PurityRow> {
    archive
        .points
        .iter()
        .filter(|p| p.protocol == Protocol::DRB)
        .filter_map(|p| p.output.as_ref().map(|o| purity_rows(&p.noise_kind, p.strength, o)))
        .flatten()
        .collect()
}

/// Mean post-preparation and final purity per noise point.
pub fn mean_purity(rows: &[PurityRow]) -> Vec<(String, f64, f64, f64)> {
    let mut out: Vec<(String, f64, f64, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|o| o.0 == r.noise_kind && o.1 == r.strength) {
            Some(o) => {
                o.2 += r.purity_after_prep;
                o.3 += r.purity_final;
                o.4 += 1;
            }
            None => out.push((r.noise_kind.clone(), r.strength, r.purity_after_prep, r.purity_final, 1)),
        }
    }
    out.into_iter()
        .map(|(k, s, a, b, n)| (k, s, a / n as f64, b / n as f64))
        .collect()
}

pub fn purity_csv(rows: &[PurityRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    if rows.is_empty() {
        w.write_record([
            "noise_kind",
            "strength",
            "depth",
            "circuit_index",
            "circuit_seed",
            "purity_after_prep",
            "purity_final",
        ])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::config::NoisePoint;

    fn small(protocols: Vec<Protocol>, sweep: Vec<NoisePoint>) -> ExperimentConfig {
        ExperimentConfig {
            name: "small".into(),
            protocols,
            noise_sweep: sweep,
            depths: vec![2, 4, 8],
            circuits_per_depth: 3,
            bootstrap_resamples: 20,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn empty_sweep_gives_empty_rows() {
        let cfg = small(Protocol::ALL.to_vec(), vec![]);
        let archive = run_experiment(&cfg).unwrap();
        assert!(archive.rows.is_empty());
        let csv = results_csv(&archive.rows).unwrap();
        assert_eq!(csv.trim(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn rows_cover_protocols_and_points() {
        let sweep = vec![NoisePoint::preset("depolarizing", 1e-3), NoisePoint::preset("depolarizing", 1e-2)];
        let cfg = small(Protocol::ALL.to_vec(), sweep);
        let archive = run_experiment(&cfg).unwrap();
        assert_eq!(archive.rows.len(), 6);
        for row in &archive.rows {
            assert!(row.failure.is_none(), "{row:?}");
            let r = row.r_estimate.unwrap();
            let t = row.r_tomography.unwrap();
            assert!((0.0..=1.0).contains(&r) && (0.0..=1.0).contains(&t));
            assert_eq!(row.n_circuits, 9);
            assert_eq!(row.config_hash, archive.config_hash);
        }
    }

    #[test]
    fn failures_are_recorded_per_row() {
        let mut cfg = small(vec![Protocol::MRB, Protocol::DRB], vec![NoisePoint::preset("depolarizing", 1e-2)]);
        cfg.depths = vec![3, 5];
        let archive = run_experiment(&cfg).unwrap();
        let mrb = &archive.rows[0];
        assert!(mrb.r_estimate.is_none() && mrb.failure.as_deref().unwrap().contains("odd"));
        assert!(archive.rows[1].r_estimate.is_some());
        let csv = results_csv(&archive.rows).unwrap();
        assert!(csv.lines().nth(1).unwrap().contains(",,,,"));
    }

    #[test]
    fn rerun_reproduces_csv() {
        let cfg = small(vec![Protocol::CRB], vec![NoisePoint::preset("t1", 1e-2)]);
        let a = results_csv(&run_experiment(&cfg).unwrap().rows).unwrap();
        let b = results_csv(&run_experiment(&cfg).unwrap().rows).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_purity_is_one() {
        let mut cfg = small(vec![Protocol::DRB], vec![NoisePoint {
            label: "none".into(),
            strength: 1.0,
            noise: Some(NoiseModel::noiseless()),
        }]);
        cfg.width = 2;
        for row in purity_diagnostic(&cfg).unwrap() {
            assert!((row.purity_after_prep - 1.0).abs() < 1e-12);
            assert!((row.purity_final - 1.0).abs() < 1e-12);
        }
    }
}
