//! Running experiments and grids, persisting their results, and turning
//! raw metrics into summaries and reports.
//!
//! Layout under `<output_dir>/<name>/`:
//!
//! ```text
//! <mode>_N<agents>/config.json           effective spec of the run
//! <mode>_N<agents>/seed<k>/metrics.csv   one row per iteration
//! <mode>_N<agents>/seed<k>/checkpoint.json
//! <mode>_N<agents>/seed<k>/manifest.json completion status
//! summary.csv, report.md, <env>.svg      grid outputs
//! ```

mod ceiling;
mod grid;
mod metrics;
mod report;
mod run;

pub use ceiling::{analytic_ceiling, constant_action_return};
pub use grid::{
    cell_spec, curve_for, mean_sample_std, run_grid, score_run, summarize, window_len, window_mean, Curve,
    GridIssues, GridSummary, SummaryRow, CONVERGENCE_FRACTION, SUMMARY_HEADER,
};
pub use metrics::{read_metrics, MetricsRow, MetricsWriter, METRICS_HEADER};
pub use report::{emit_report, render_markdown, render_svg, xml_escape};
pub use run::{
    cell_dir, experiment_root, run_experiment, seed_dir, worker_count, Checkpoint, ExperimentReport, SeedManifest,
    SeedStatus,
};

#[cfg(test)]
mod tests;
