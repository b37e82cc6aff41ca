//! Experiment harness: JSON manifests, sequential cell execution, CSV
//! records and SVG wall-time charts.

pub mod manifest;
pub mod report;
pub mod runner;

pub use manifest::{ExperimentManifest, ImageSource, InstanceFamily, SolverKind};
pub use report::{emit_outputs, read_records_csv, render_chart, summarize, write_records_csv, CellSummary, LogAxis, OutputFormat};
pub use runner::{gamma_star, run_experiment, solve_cell, CellOutcome, CellSettings, RunRecord, RunStatus};
