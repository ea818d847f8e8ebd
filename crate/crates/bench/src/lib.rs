//! Kershaw mesh optimization benchmark: configuration, driver, CSV and VTK output.

pub mod config;
pub mod report;
pub mod run;
pub mod vtk;

use std::path::PathBuf;

pub use config::{BenchConfig, Cli, Limit, Switch, TargetKind};
pub use report::{timing_breakdown, write_csv, RunReport, TimingRow, TimingTable, CSV_COLUMNS};
pub use run::{max_deviation, run_benchmark, run_benchmark_observed, vtk_path};
pub use vtk::{lagrange_hex_index, lagrange_quad_index, vtk_connectivity, write_vtk};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tmop_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}
