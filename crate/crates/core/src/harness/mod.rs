//! Seeded experiments: cost and disturbance generation, runs of both
//! controllers against the benchmarks, regret curves and CSV output.

mod config;
mod report;
mod run;

pub use config::{CostGenConfig, DacConfig, ExperimentConfig, OlcConfig, Setup, SystemConfig};
pub use report::{
    benchmarks_csv, compute_regret, failures_csv, run_all, run_csv, run_experiment, summary_csv,
    write_outputs, ExperimentOutcome, RegretCurves, RegretReport,
};
pub use run::{
    generate_costs, generate_disturbances, play, run_rng, run_seed, run_single, step_size_for,
    RunRecord, Trace, STATE_BOUND_SLACK,
};
