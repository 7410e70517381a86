//! End-to-end acceptance checks. Each check prints one PASS/FAIL line
//! followed by a summary. With `QUBENCH_ACCEPTANCE_STRICT=1` the process
//! exits non-zero if any check fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use qubench_core::backend::mock::{MockResponse, MockScript, MockServer};
use qubench_core::backend::{local_execute, JobStatus, RemoteClient, RemoteConfig};
use qubench_core::circgen::{generate_random_circuit, ideal_unitary, Circuit, Topology};
use qubench_core::fitting::{fit_decay, FitOptions};
use qubench_core::noise::NoiseModel;
use qubench_core::protocols::{run_protocol, DecaySample, Protocol, ProtocolRunSpec};
use qubench_core::qcore::{equal_up_to_phase, ptm_from_unitary, PauliString, PauliTransferMatrix};
use qubench_core::runner::{
    log10_ratio, mean_purity, purity_diagnostic, run_experiment, ExperimentConfig, NoisePoint, ResultRow,
};
use qubench_core::tomography::{circuit_channel_ptm, circuit_fidelity, haar_average_fidelity_mc, ideal_layers_ptm};
use qubench_core::twirl::{randomized_compile, randomized_compile_with, FinalFrame};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sweep_config(name: &str, protocols: Vec<Protocol>, sweep: Vec<NoisePoint>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        width: 2,
        xi: 0.75,
        protocols,
        noise_sweep: sweep,
        circuits_per_depth: 20,
        shots: 0,
        seed: 2024,
        bootstrap_resamples: 200,
        ..ExperimentConfig::default()
    }
}

fn presets(label: &str, strengths: &[f64]) -> Vec<NoisePoint> {
    strengths.iter().map(|&s| NoisePoint::preset(label, s)).collect()
}

fn ratio(row: &ResultRow) -> Option<f64> {
    log10_ratio(row).map(|l| 10f64.powf(l))
}

fn describe(rows: &[ResultRow]) -> String {
    rows.iter()
        .map(|r| match ratio(r) {
            Some(x) => format!("{}@{:.0e}={:.3}", r.protocol, r.strength, x),
            None => format!("{}@{:.0e}=n/a", r.protocol, r.strength),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn within_factor(rows: &[ResultRow], factor: f64) -> bool {
    rows.iter()
        .all(|r| ratio(r).is_some_and(|x| x <= factor && x >= 1.0 / factor))
}

fn depolarizing_agreement() -> Outcome {
    let cfg = sweep_config(
        "depolarizing",
        Protocol::ALL.to_vec(),
        presets("depolarizing", &[1e-3, 3e-3, 1e-2, 3e-2]),
    );
    let archive = run_experiment(&cfg).expect("experiment runs");
    outcome(
        within_factor(&archive.rows, 1.25),
        format!("r_est/r_tomo: {}", describe(&archive.rows)),
    )
}

fn row_at(rows: &[ResultRow], protocol: Protocol, label: &str, strength: f64) -> ResultRow {
    rows.iter()
        .find(|r| r.protocol == protocol && r.noise_kind == label && r.strength == strength)
        .cloned()
        .expect("row present")
}

fn t1_divergence() -> Outcome {
    let cfg = sweep_config("t1", Protocol::ALL.to_vec(), presets("t1", &[1e-3, 1e-2, 1e-1]));
    let archive = run_experiment(&cfg).expect("experiment runs");
    let dev = |p| log10_ratio(&row_at(&archive.rows, p, "t1", 1e-1)).map(f64::abs);
    let (drb, mrb, crb) = (dev(Protocol::DRB), dev(Protocol::MRB), dev(Protocol::CRB));
    let pass = match (drb, mrb, crb) {
        (Some(d), Some(m), Some(c)) => d > m && d > c,
        _ => false,
    };
    outcome(
        pass,
        format!(
            "|log10 ratio| at 0.1: DRB={drb:.3?} MRB={mrb:.3?} CRB={crb:.3?}; all: {}",
            describe(&archive.rows)
        ),
    )
}

fn t1_dominance() -> Outcome {
    let combined = NoiseModel::combine(&[("t1", 1e-1), ("coherent1q", 1e-2)]).unwrap();
    let sweep = vec![
        NoisePoint {
            label: "t1+coherent1q".into(),
            strength: 1e-1,
            noise: Some(combined),
        },
        NoisePoint::preset("t1", 1e-1),
        NoisePoint::preset("coherent1q", 1e-2),
    ];
    let archive = run_experiment(&sweep_config("t1-dominance", vec![Protocol::DRB], sweep)).unwrap();
    let r = |i: usize| archive.rows[i].r_estimate;
    let (Some(both), Some(t1), Some(coh)) = (r(0), r(1), r(2)) else {
        return outcome(false, format!("missing estimate: {:?}", archive.rows));
    };
    let vs_t1 = (both / t1 - 1.0).abs();
    let vs_coh = (both / coh).max(coh / both);
    outcome(
        vs_t1 < 0.25 && vs_coh > 2.0,
        format!("r_DRB combined={both:.4e} t1={t1:.4e} coherent={coh:.4e}; rel vs t1={vs_t1:.3}, factor vs coherent={vs_coh:.2}"),
    )
}

fn purity_decrease() -> Outcome {
    let cfg = sweep_config("purity", vec![Protocol::DRB], presets("t1", &[1e-3, 1e-2, 1e-1]));
    let means = mean_purity(&purity_diagnostic(&cfg).unwrap());
    let prep: Vec<f64> = means.iter().map(|m| m.2).collect();
    let decreasing = prep.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && prep[2] < 0.9,
        format!("mean post-prep purity over gamma 1e-3,1e-2,1e-1: {prep:.4?}"),
    )
}

fn coherent_sensitivity() -> Outcome {
    let mut sweep = presets("coherent1q", &[1e-3, 1e-2, 1e-1]);
    sweep.extend(presets("coherent2q", &[1e-3, 1e-2, 1e-1]));
    let archive = run_experiment(&sweep_config("coherent", Protocol::ALL.to_vec(), sweep)).unwrap();
    outcome(
        within_factor(&archive.rows, 2.0),
        format!("r_est/r_tomo: {}", describe(&archive.rows)),
    )
}

fn random_noise<R: Rng>(rng: &mut R) -> NoiseModel {
    let kinds = ["depolarizing", "t1", "t2", "coherent1q", "coherent2q", "t1+t2", "depolarizing+coherent1q"];
    let kind = kinds[rng.random_range(0..kinds.len())];
    let strength = 10f64.powf(rng.random_range(-3.0..-1.0));
    NoiseModel::preset(kind, strength).unwrap()
}

fn haar_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut agree = 0;
    for i in 0..100u64 {
        let w = 1 + (i % 2) as usize;
        let xi = if w == 1 { 0.0 } else { 0.5 };
        let depth = rng.random_range(1..=4);
        let circuit = generate_random_circuit(w, depth, xi, &Topology::line(w), rng.random()).unwrap();
        let noise = random_noise(&mut rng);
        let exact = circuit_fidelity(&circuit, &noise).unwrap().average_gate_fidelity;
        let mc = haar_average_fidelity_mc(&circuit, &noise, 5000, rng.random()).unwrap();
        if mc.agrees_with(exact, 3.0) {
            agree += 1;
        }
    }
    outcome(agree >= 95, format!("{agree}/100 instances within 3 standard errors"))
}

fn noiseless_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for w in 1..=3 {
        for seed in 0..30u64 {
            for protocol in Protocol::ALL {
                let spec = ProtocolRunSpec {
                    protocol,
                    width: w,
                    topology: Topology::line(w),
                    xi: if w == 1 { 0.0 } else { 0.5 },
                    depths: vec![2, 4, 8],
                    circuits_per_depth: 3,
                    shots: 0,
                    noise: NoiseModel::noiseless(),
                    seed,
                };
                let fit = run_protocol(&spec)
                    .and_then(|out| fit_decay(&out.samples, &FitOptions::for_protocol(protocol, w).with_resamples(20)));
                match fit {
                    Ok(f) => worst = worst.max(f.r),
                    Err(e) => failures.push(format!("{protocol} w={w} seed={seed}: {e}")),
                }
            }
        }
    }
    outcome(
        failures.is_empty() && worst <= 1e-6,
        format!("max r over 270 runs = {worst:.2e}; failures: {failures:?}"),
    )
}

fn fit_calibration() -> Outcome {
    let (a, b, p): (f64, f64, f64) = (0.5, 0.5, 0.95);
    let depths = [2usize, 4, 8, 16, 32];
    let noise = Normal::new(0.0, 0.005).unwrap();
    let mut covered = 0;
    let mut accurate = 0;
    let mut worst: f64 = 0.0;
    let mut squared = 0.0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + trial);
        let mut samples = Vec::new();
        for &m in &depths {
            for k in 0..20 {
                samples.push(DecaySample {
                    protocol: Protocol::DRB,
                    depth: m,
                    circuit_seed: (m * 100 + k) as u64,
                    pauli_label: None,
                    value: a + b * p.powi(m as i32) + noise.sample(&mut rng),
                });
            }
        }
        let opts = FitOptions {
            floor: 0.5,
            width: 1,
            layers_per_depth: 1,
            bootstrap_resamples: 1000,
            seed: trial,
        };
        let fit = fit_decay(&samples, &opts).expect("fit converges");
        let err = (fit.p - p).abs();
        worst = worst.max(err);
        squared += err * err;
        if err <= 0.003 {
            accurate += 1;
        }
        if fit.p_ci_low <= p && p <= fit.p_ci_high {
            covered += 1;
        }
    }
    outcome(
        accurate >= 90 && covered >= 90,
        format!(
            "|p_hat - p| <= 0.003 in {accurate}/100 (max {worst:.2e}, rms {:.2e}); CI coverage {covered}/100",
            (squared / 100.0).sqrt()
        ),
    )
}

/// Error channel of `circuit` relative to its ideal unitary, seen after the
/// residual frame `frame` has been undone.
fn error_generator(circuit: &Circuit, frame: &PauliString, noise: &NoiseModel) -> PauliTransferMatrix {
    let noisy = circuit_channel_ptm(circuit, noise).unwrap();
    let ideal = ideal_layers_ptm(circuit.width, &circuit.layers).unwrap();
    let undo = ptm_from_unitary(&frame.matrix()).unwrap();
    let data = undo.matrix() * noisy.matrix() * ideal.matrix().transpose() * undo.matrix();
    PauliTransferMatrix::new(circuit.width, data).unwrap()
}

fn twirl_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_equivalence = true;
    let noise = NoiseModel::combine(&[("coherent1q", 0.05), ("coherent2q", 0.05)]).unwrap();
    let (mut bare_total, mut twirled_total) = (0.0, 0.0);
    let mut min_ratio = f64::INFINITY;
    for _ in 0..20 {
        let w = 2;
        let circuit = generate_random_circuit(w, 4, 0.5, &Topology::line(w), rng.random()).unwrap();
        let u = ideal_unitary(&circuit).unwrap();
        for s in 0..20u64 {
            let (compiled, _) = randomized_compile(&circuit, rng.random::<u64>() ^ s).unwrap();
            worst_equivalence &= equal_up_to_phase(&ideal_unitary(&compiled).unwrap(), &u, 1e-10);
        }
        let bare = error_generator(&circuit, &PauliString::identity(w), &noise).off_diagonal_norm();
        let twirled: Vec<PauliTransferMatrix> = (0..200u64)
            .map(|_| {
                let c = randomized_compile_with(&circuit, rng.random(), FinalFrame::Track).unwrap();
                error_generator(&c.circuit, &c.final_frame, &noise)
            })
            .collect();
        let avg = PauliTransferMatrix::mean(&twirled).unwrap().off_diagonal_norm();
        bare_total += bare;
        twirled_total += avg;
        min_ratio = min_ratio.min(bare / avg);
    }
    let suppression = bare_total / twirled_total;
    outcome(
        worst_equivalence && suppression >= 10.0,
        format!(
            "400 compilations equivalent: {worst_equivalence}; off-diagonal suppression {suppression:.1}x (min per circuit {min_ratio:.1}x)"
        ),
    )
}

fn fast_client(endpoint: String) -> RemoteClient {
    RemoteClient::new(RemoteConfig {
        initial_backoff: Duration::from_millis(5),
        poll_interval: Duration::from_millis(5),
        timeout: Duration::from_secs(5),
        ..RemoteConfig::new(endpoint, "token")
    })
}

fn backend_contract() -> Outcome {
    let circuit = generate_random_circuit(2, 3, 0.5, &Topology::line(2), 5).unwrap();
    let submitted = MockResponse::json(200, r#"{"job_id":"j"}"#);
    let done = MockResponse::json(200, r#"{"status":"Done","counts":{"00":600,"01":400}}"#);
    let queued = MockResponse::json(200, r#"{"status":"Queued"}"#);
    let mut notes = Vec::new();

    let immediate = {
        let server = MockServer::start(MockScript {
            submit: vec![submitted.clone()],
            poll: vec![done.clone()],
        })
        .unwrap();
        let mut client = fast_client(server.endpoint());
        let job = client.submit(&circuit, 1000).and_then(|j| client.wait(j));
        job.is_ok_and(|j| j.status == JobStatus::Done && j.counts.map(|c| c.values().sum::<u64>()) == Some(1000))
    };
    notes.push(format!("immediate-done={immediate}"));

    let sequenced = {
        let server = MockServer::start(MockScript {
            submit: vec![submitted.clone()],
            poll: vec![queued.clone(), queued, done],
        })
        .unwrap();
        let mut client = fast_client(server.endpoint());
        let job = client.submit(&circuit, 1000).and_then(|j| client.wait(j));
        job.is_ok_and(|j| j.status == JobStatus::Done) && server.request_count("GET") == 3
    };
    notes.push(format!("queued-then-done={sequenced}"));

    let failing = {
        let server = MockServer::start(MockScript {
            submit: vec![MockResponse::json(500, "{}")],
            poll: vec![],
        })
        .unwrap();
        let mut client = fast_client(server.endpoint());
        matches!(
            client.submit(&circuit, 1000),
            Err(qubench_core::Error::BackendUnavailable { attempts: 3, .. })
        ) && server.request_count("POST") == 3
    };
    notes.push(format!("persistent-failure={failing}"));

    let shots = 100_000u64;
    let noise = NoiseModel::combine(&[("depolarizing", 1e-2), ("t1", 2e-2)]).unwrap();
    let mut outcomes_ok = true;
    let mut worst_z: f64 = 0.0;
    for seed in 0..4u64 {
        let c = generate_random_circuit(2, 4, 0.5, &Topology::line(2), 100 + seed).unwrap();
        let exact = local_execute(&c, &noise, 0, 0).unwrap().probabilities(2).unwrap();
        let sampled = local_execute(&c, &noise, shots, seed).unwrap().probabilities(2).unwrap();
        for (p, q) in exact.iter().zip(&sampled) {
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            let z = if sigma > 0.0 { (q - p).abs() / sigma } else { (q - p).abs() * 1e12 };
            worst_z = worst_z.max(z);
            outcomes_ok &= z <= 3.0;
        }
    }
    notes.push(format!("local outcome max z={worst_z:.2}"));

    let spec = |shots| ProtocolRunSpec {
        protocol: Protocol::DRB,
        width: 2,
        topology: Topology::line(2),
        xi: 0.5,
        depths: vec![2, 4],
        circuits_per_depth: 3,
        shots,
        noise: noise.clone(),
        seed: 31,
    };
    let exact = run_protocol(&spec(0)).unwrap();
    let sampled = run_protocol(&spec(shots)).unwrap();
    let mut protocol_z: f64 = 0.0;
    for (e, s) in exact.samples.iter().zip(&sampled.samples) {
        let sigma = (e.value * (1.0 - e.value) / shots as f64).sqrt().max(1e-12);
        protocol_z = protocol_z.max((s.value - e.value).abs() / sigma);
    }
    notes.push(format!("protocol samples max z={protocol_z:.2}"));

    outcome(
        immediate && sequenced && failing && outcomes_ok && protocol_z <= 3.0,
        notes.join(", "),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 10] = [
        ("1 depolarizing agreement", depolarizing_agreement),
        ("2 DRB divergence under strong T1", t1_divergence),
        ("3 T1 dominance in DRB", t1_dominance),
        ("4 purity after state preparation", purity_decrease),
        ("5 coherent-error sensitivity", coherent_sensitivity),
        ("6 Haar average vs PTM fidelity", haar_consistency),
        ("7 noiseless identity", noiseless_identity),
        ("8 fit calibration", fit_calibration),
        ("9 twirl correctness and suppression", twirl_correctness),
        ("10 backend contract", backend_contract),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        ran += 1;
        println!(
            "[{}] {name} ({:.1}s): {}",
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
        if !result.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {ran} checks passed", ran - failed);
    let strict = std::env::var("QUBENCH_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
