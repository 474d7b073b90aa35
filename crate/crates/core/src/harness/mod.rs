//! Experiment plumbing behind the `frsparse` CLI.

pub mod capture;
pub mod config;
pub mod montecarlo;
pub mod report;

pub use capture::{ingest_capture, read_iq_csv, write_iq_csv, CaptureFormat};
pub use config::ExperimentConfig;
pub use montecarlo::{run_monte_carlo, MonteCarloReport, PointSummary, TrialRecord, TrialStatus};
