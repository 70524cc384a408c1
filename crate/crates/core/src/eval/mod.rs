//! Scenario files, batch runs, metrics and reports.

mod metrics;
mod report;
mod scenario;

pub use metrics::{compute_metrics, run_batch, run_suite, RunMetrics, RunRecord};
pub use report::{
    aggregate, emit_report, mean_std, read_csv, render_svg, summarize, text_table, write_csv, PlannerStats, ReportRow,
};
pub use scenario::{load_scenario, load_scenario_dir, CameraSettings, NoiseParams, Scenario};
