//! Experiment configuration, the trial runner and report output.

mod config;
mod report;
mod run;

pub use config::{
    Aggregation, DataOperationSettings, ExperimentConfig, ExperimentName, GraphSettings, GridAxis,
    TuSource,
};
pub use report::{csv_body, emit_report, histogram, normalized_csv_body, traces_csv_body, Format};
pub use run::{
    aggregate_rows, run_experiment, Summary, SweepReport, SweepRow, TrialEntry, CLOSED_FORM,
};
