//! Experiment protocols: radiation patterns, received-field profiles,
//! spectral-efficiency sweeps, orientation-averaged sweeps and channel dumps.
//!
//! Every run is a pure function of an [`ExperimentSpec`]; grid points are
//! evaluated in parallel and always reported in grid order.

mod config;
mod output;
mod run;
pub mod selfcheck;
pub mod svg;

pub use config::{ExperimentSpec, FileConfig, OutputSpec, Preset, SweepParam, SweepSpec};
pub use output::{
    avg_sweep_csv, field_csv, fmt_float, pattern_csv, sweep_csv, write_text,
};
pub use run::{
    evaluate_point, run_avg_sweep, run_channel_dump, run_field, run_pattern, run_sweep,
    with_workers, AvgRecord, FieldTable, PatternTable, PointOutcome, SweepRecord, WORKERS_ENV,
};
