//! Experiment harness for the inexact generalized ADMM solver: synthetic
//! problem generation, the end-to-end verification protocol, and CSV/JSON
//! report emission. The `inexact-admm` binary is a thin argument layer over
//! this library.

pub mod experiment;
pub mod report;

pub use experiment::{
    gamma_20_sqrt_log2, gamma_2_sqrt_log2, gen_ksupp, gen_lasso, run_experiment, Experiment,
    ExperimentConfig, ExperimentError,
};
pub use report::{
    csv_string, json_string, parse_csv, read_csv, recompute_p, write_report, ReportFormat,
    ReportRow, RunReport, Summary,
};
