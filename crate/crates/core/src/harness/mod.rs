//! Reproducible experiment orchestration.
//!
//! A TOML config names an experiment kind, its parameter grids, the number
//! of realizations per grid point and a master seed. Realizations run on a
//! rayon pool; every record derives its own seed from the master seed and
//! its realization index, and results are collected in grid order, so the
//! output is identical for any worker count. Wall times go to a separate
//! sidecar file to keep the record table deterministic.

mod config;
mod run;
mod summary;

pub use config::{
    preset_names, ElectroGrid, ExperimentConfig, ExperimentKind, LandscapeSection, Physics, ShuttleGrid,
    TransferGrid,
};
pub use run::{
    run_experiment, run_summary, shuttle_seed, version_stamp, write_outputs, write_records, Extras, Record,
    RunSummary, SweepResult,
};
pub use summary::{aggregate, mean_stderr, summarize, summarize_reader, PointSummary, SummaryTable};
