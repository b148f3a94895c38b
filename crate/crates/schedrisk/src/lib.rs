//! Schedule-risk simulation for engineering change processes.
//!
//! The crate models a change process as an ordered list of steps — tasks
//! with triangular or deterministic durations, parallel fan-out blocks, and
//! probabilistic rework loops — and answers two questions about it:
//!
//! * how long does the process take, and where does the time go, under
//!   seeded Monte Carlo sampling ([`sim`]);
//! * how do those answers change after a declarative what-if transformation
//!   of the process ([`scenario`], [`stats`]).
//!
//! Randomness is counter-based and keyed per event, so runs are
//! reproducible bit-for-bit across platforms and worker counts, and a
//! baseline/transformed pair under one master seed forms a common-random-
//! numbers experiment: per-iteration differences isolate the transformation
//! effect.
//!
//! Documents (models, scenarios) are strict JSON with located diagnostics;
//! see [`io`].

pub mod io;
pub mod model;
pub mod scenario;
pub mod sim;
pub mod stats;

pub use io::{parse_model, parse_scenario, serialize_model, serialize_scenario, ParseFailure};
pub use model::{
    triangular_moments, validate_model, Diagnostic, DurationDistribution, ProcessModel, Step,
    TaskCategory,
};
pub use scenario::{apply_scenario, Scenario, TransformError, TransformOp};
pub use sim::{
    event_uniform, inverse_cdf, run_monte_carlo, simulate_once, IterationOutcome, ResultSet,
    SimError, SimulationConfig,
};
pub use stats::{
    boxplot_descriptor, compare, export_results_csv, parse_results_csv, percent_reduction,
    quantile, summarize, BoxplotDescriptor, ComparisonReport, SummaryStatistics,
};
