//! Experiment harness: simulate, initialize, optimize and score.
//!
//! Artifacts go under the output directory as
//! `<formulation>_<method>_<reg>/run<k>/{report.csv, solution.pgm, solution.bimg}`
//! with `summary.csv` at the root. Formats are described in `docs/formats.md`.

mod config;
mod metrics;
mod pipeline;
mod sweep;

pub use config::{ExperimentConfig, Formulation, MethodSpec, RegKind};
pub use metrics::{raw_relative_error, relative_error, rotate_180};
pub use pipeline::{
    evaluate, evaluate_on, noiseless_instance, prepare_instance, prepare_instances, problem_index, read_rows, run_comparison, run_experiment, satellite_truth, solve_instance,
    write_rows, write_run, Evaluation, Instance, MetricsRow, Outcome,
};
pub use sweep::{
    gridsearch, log_grid, read_sweep, run_robustness_sweep, spearman, sweep_methods, write_sweep, SweepParameter, SweepRow,
};
