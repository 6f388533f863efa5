//! Stochastic primal-dual fixed-point solvers for
//!
//! ```text
//! min_x (1/n) Σ_j φ_j(x) + (ν/2)‖x‖² + μ‖Bx‖₁
//! ```
//!
//! with square, logistic or hinge sample losses and a sparse linear
//! operator `B`. The deterministic PDFP iteration, both forms of its
//! stochastic variant, a linearized stochastic ADMM baseline and the
//! convergence-rate tools live here; I/O and experiment drivers are in the
//! CLI crate.

pub mod analysis;
mod error;
pub mod grad;
pub mod linalg;
pub mod operators;
pub mod problem;
pub mod prox;
pub mod solvers;
pub mod sparse;
pub mod spectral;

pub use analysis::{
    check_recursion_bound, default_bound_grid, fit_rate, joint_error, lemma_bound,
    lemma_bound_from, phi_c, simulate_recursion, BoundCheck, ErrorTrace, RecursionParams,
    TracePoint,
};
pub use error::{Error, Result};
pub use grad::{
    full_gradient, make_batch_plan, stochastic_gradient, variance_constants, BatchPlan, GradSample,
    VarianceConstants,
};
pub use operators::{build_difference_matrix, stack_identity};
pub use problem::{Dataset, Loss, ProblemSpec};
pub use prox::{soft_threshold, ProxKind, ProxSpec, ProximalMap};
pub use solvers::{
    fixed_point_residual, pdfp_dual_to_subgradient, pdfp_step, run_solver, solver_rng,
    spdfp_step_alg1, spdfp_step_alg1_with_batch, spdfp_step_alg2, spdfp_step_alg2_with_batch,
    AdmmConfig, AdmmState, EpochView, IterState, Reference, Run, RunOutput, RunRecord,
    SolverConfig, SolverKind, SolverRng, StepSchedule, StocAdmm,
};
pub use sparse::SparseMatrix;
pub use spectral::{estimate_spectrum, largest_gram_eigenvalue, SpectralEstimate};
