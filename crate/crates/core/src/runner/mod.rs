//! Experiment orchestration: configuration, sweeps, persistence and reports.

mod config;
mod experiment;
mod report;

pub use config::{default_strengths, log_grid, ExperimentConfig, NoisePoint, TopologySpec, SCHEMA_VERSION};
pub use experiment::{
    archived_purity, mean_purity, purity_csv, purity_diagnostic, refit_archive, results_csv, run_experiment,
    tomography_reference, write_outputs, ExperimentArchive, LayerInfidelityCache, PointRecord, PurityRow,
    ResultRow, ARCHIVE_FILE, CSV_COLUMNS, RESULTS_FILE,
};
pub use report::{log10_ratio, report, report_from_path, Report, DIVERGENCE_THRESHOLD, FIGURE_COLUMNS};
