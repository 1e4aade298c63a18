//! Convergence studies on the manufactured problems: theoretical rates,
//! level-by-level solves, EOCs and report files.

mod config;
mod flattening;
mod rates;
mod report;
mod run;

use std::path::PathBuf;

use thiserror::Error;

use crate::control::ControlError;
use crate::fem::FemError;
use crate::manufactured::ManufacturedError;
use crate::mesh::MeshError;

pub use config::{default_band, parse_angle, StudyConfig};
pub use flattening::{corner_flattening_report, BoundTaken, FlatteningReport};
pub use rates::{rate_grid, theoretical_rate, RateQuery, RateSource, TheoreticalRate};
pub use report::{
    emit_report, parse_csv, plot_data, report_csv, report_json, write_atomic, CsvRow, ReportPaths,
    CSV_HEADER,
};
pub use run::{
    eoc_sequence, lsq_slope, rate_query, report_from_levels, run_level, run_study, run_study_with,
    solve_level, EocReport, LevelRecord, LevelRun,
};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid study configuration: {0}")]
    InvalidConfig(String),
    #[error("angle {0} outside (0, 2pi)")]
    InvalidAngle(f64),
    #[error("no convergence result covers this configuration: {0}")]
    UnsupportedRegime(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Manufactured(#[from] ManufacturedError),
}
