//! Reports on kernel traces, kernel sweeps over `K`, and goodness-of-fit
//! statistics for samplers.

mod report;
mod sampling;
mod stats;
mod sweep;

pub use report::{ArrayReport, TraceReport};
pub use sampling::{draw_samples, SamplerMethod};
pub use stats::{chi_square, counts, critical_value, ChiSquare};
pub use sweep::{
    random_params, run_sweep, SweepConfig, SweepResult, SweepRun, DEFAULT_TOPICS, SWEEP_HEADER,
    SWEEP_SCHEMA,
};
