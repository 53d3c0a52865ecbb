//! Experiment harnesses: sample, estimate and measure over a grid of n and
//! seeds, then write CSV tables and a text summary.

mod config;
mod report;
mod run;

#[cfg(test)]
mod tests;

pub use config::{Algorithm, ClassRule, DensityRule, ExperimentConfig, ExperimentKind, Metric};
pub use report::{
    emit_csv, loglog_slope, median, quantile, summarize, summary_csv, summary_txt, timings_csv, trials_csv,
    write_outputs, SummaryRow, SUMMARY_COLUMNS, TIMING_COLUMNS, TRIAL_COLUMNS,
};
pub use run::{
    cut_bound, partition_bound, run, run_concentration, run_consistency, run_degree_distribution,
    run_norm_convergence, tail_slope, trial_seed, truth_l1, MetricValue, TrialRecord, NORM_TOL, TAIL_SLOPE_TOL,
};
