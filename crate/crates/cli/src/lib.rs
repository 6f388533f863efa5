//! Harness around `spdfp-core`: LIBSVM and coordinate-list I/O, synthetic
//! fused-lasso instances, cached ground truth, and seeded experiment runs
//! written as CSV.

pub mod config;
mod error;
pub mod experiment;
pub mod graph;
pub mod libsvm;
pub mod synth;
pub mod truth;

pub use config::{
    DataSettings, ExperimentConfig, GraphSource, LambdaSetting, ProblemSource, SolverEntry,
    TruthSettings,
};
pub use error::{CliError, Result};
pub use experiment::{
    aggregate, prepare_problem, repetition_seeds, run_experiment, run_prepared, AggregateRow,
    ExperimentOutput, ExperimentRow, PreparedProblem,
};
pub use graph::{build_graph_matrix, load_coordinate, save_coordinate, GraphBuild};
pub use libsvm::{load_libsvm, parse_libsvm, save_libsvm, write_libsvm};
pub use synth::{synth_fused_lasso, SynthParams, SynthProblem};
pub use truth::{cached_ground_truth, compute_ground_truth, pdfp_config, GroundTruth};
