//! Seeded multi-run experiments over built-in or loaded instances.

mod experiment;
mod generators;
mod output;

pub use experiment::{
    optimum_for, run_experiment, run_seed, stable_hash, CellSummary, ExperimentOutput, ExperimentSpec, OptimumSource,
    Report, RunRecord, OPTIMUM_TOLERANCE,
};
pub use generators::{gen_clockwork, gen_signal_corridor, Generator};
pub use output::{emit_csv, emit_plot_data, format_significant, CSV_HEADER};
