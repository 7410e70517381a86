use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qubench_core::backend::{CountsTable, ExecutionBackend, RemoteClient};
use qubench_core::circgen::{generate_random_circuit, to_openqasm, Circuit};
use qubench_core::runner::{
    mean_purity, purity_csv, purity_diagnostic, refit_archive, report, results_csv, run_experiment, write_outputs,
    ExperimentArchive, ExperimentConfig, RESULTS_FILE,
};

#[derive(Parser)]
#[command(name = "qubench", version, about = "Randomized benchmarking on a noisy density-matrix simulator")]
struct Cli {
    /// Experiment config (JSON). Defaults to the built-in depolarizing sweep.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the default experiment config.
    Config,
    /// Generate one random circuit with the config's width, topology and density.
    Generate {
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Write OpenQASM instead of circuit JSON.
        #[arg(long)]
        qasm: bool,
    },
    /// Run the full sweep and write results.csv and archive.json.
    Run,
    /// Re-fit the samples stored in an archive.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        resamples: Option<usize>,
    },
    /// Write per-figure CSV tables and a summary for an archive.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
    /// Purity after state preparation and at the end of each direct-benchmarking circuit.
    Purity,
    /// Execute a circuit on the remote service named by QUBENCH_ENDPOINT / QUBENCH_TOKEN.
    Submit {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 1000)]
        shots: u64,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_counts(table: &CountsTable) {
    for (bits, count) in &table.counts {
        println!("{bits} {count}");
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Config => emit(cli.out.as_deref(), &(ExperimentConfig::default().to_json()? + "\n")),
        Command::Generate { depth, qasm } => {
            let cfg = load_config(cli)?;
            let circuit = generate_random_circuit(cfg.width, *depth, cfg.xi, &cfg.topology()?, cfg.seed)?;
            let text = if *qasm { to_openqasm(&circuit) } else { circuit.to_json()? + "\n" };
            emit(cli.out.as_deref(), &text)
        }
        Command::Run => {
            let cfg = load_config(cli)?;
            let archive = run_experiment(&cfg)?;
            let (csv, json) = write_outputs(&archive, &cfg.output_dir)?;
            let failed = archive.rows.iter().filter(|r| r.failure.is_some()).count();
            println!(
                "{} rows ({failed} failed) -> {} and {}",
                archive.rows.len(),
                csv.display(),
                json.display()
            );
            Ok(())
        }
        Command::Fit { input, resamples } => {
            let archive = ExperimentArchive::load(input)?;
            let rows = refit_archive(&archive, *resamples);
            let text = results_csv(&rows)?;
            match &cli.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    emit(Some(&dir.join(RESULTS_FILE)), &text)
                }
                None => emit(None, &text),
            }
        }
        Command::Report { input } => {
            let archive = ExperimentArchive::load(input)?;
            let rep = report(&archive)?;
            let dir = cli
                .out
                .clone()
                .unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
            let written = rep.write(&dir)?;
            print!("{}", rep.summary);
            println!("wrote {} files to {}", written.len(), dir.display());
            Ok(())
        }
        Command::Purity => {
            let cfg = load_config(cli)?;
            let rows = purity_diagnostic(&cfg)?;
            for (kind, strength, prep, fin) in mean_purity(&rows) {
                println!("{kind} {strength} after_prep={prep:.6} final={fin:.6}");
            }
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                emit(Some(&dir.join("fig6_purity.csv")), &purity_csv(&rows)?)?;
            }
            Ok(())
        }
        Command::Submit { circuit, shots } => {
            let text = std::fs::read_to_string(circuit).with_context(|| format!("reading {}", circuit.display()))?;
            let circuit = Circuit::from_json(&text)?;
            let mut client = RemoteClient::from_env()?;
            if circuit.width > client.capabilities().max_qubits {
                bail!("circuit is wider than the backend supports");
            }
            let result = client.execute(&circuit, *shots);
            if let Some(path) = &cli.out {
                emit(Some(path), &serde_json::to_string_pretty(client.archive())?)?;
            }
            print_counts(&result?);
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    pool.install(|| execute(&cli))
}
