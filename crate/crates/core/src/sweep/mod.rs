//! Distortion sweeps, correlation against distortion degree, and reports.

mod plot;
mod records;
mod run;
mod stats;

pub use plot::{lineplot_svg, render_lineplot, Axes, Series};
pub use records::{
    fmt6, read_records, read_records_from, round6, sort_records, write_records, write_records_to,
    SweepRecord, CSV_HEADER, NO_DISTORTION, OK_STATUS,
};
pub use run::{run_batch, run_sweep, MetricSuite, SweepOptions};
pub use stats::{
    correlate, degree_means, pearson, percent_change, reports_json, CorrelationReport,
    CorrelationStatus,
};
