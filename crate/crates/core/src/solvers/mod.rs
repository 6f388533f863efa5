//! Iteration engines for `min f1(Bx) + f2(x)`.
//!
//! * [`pdfp_step`]: batch primal-dual fixed-point step with constant `γ`.
//! * [`spdfp_step_alg1`] / [`spdfp_step_alg2`]: the stochastic variant in its
//!   analysis form and its implementation form. Both produce the same primal
//!   iterates; the duals differ by the factor `λ/γ_{k-1}`.
//! * [`StocAdmm`]: linearized stochastic ADMM baseline.
//!
//! All steps take the state by reference and return the next state.

mod admm;
mod pdfp;
mod run;
mod spdfp;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};

use crate::error::{check_len, Error, Result};
use crate::problem::ProblemSpec;
use crate::prox::ProximalMap;
use crate::sparse::SparseMatrix;
use crate::spectral::largest_gram_eigenvalue;

pub use admm::{AdmmConfig, AdmmState, StocAdmm};
pub use pdfp::{fixed_point_residual, pdfp_step};
pub use run::{run_solver, EpochView, Reference, Run, RunOutput, RunRecord};
pub use spdfp::{
    spdfp_step_alg1, spdfp_step_alg1_with_batch, spdfp_step_alg2, spdfp_step_alg2_with_batch,
};

/// PRNG owned by a single solver run.
pub type SolverRng = rand_pcg::Pcg64;

pub fn solver_rng(seed: u64) -> SolverRng {
    use rand::SeedableRng;
    SolverRng::seed_from_u64(seed)
}

/// Diminishing step `γ_k = c / k^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    c: f64,
    alpha: f64,
}

impl StepSchedule {
    pub fn new(c: f64, alpha: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("step constant c must be positive, got {c}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(StepSchedule { c, alpha })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `γ_k` for `k ≥ 1`.
    #[inline]
    pub fn gamma(&self, k: usize) -> f64 {
        debug_assert!(k >= 1, "step index starts at 1");
        self.c / (k as f64).powf(self.alpha)
    }
}

/// Primal iterate `x_k`, dual iterate `v_k`, step index `k` and `γ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterState {
    pub x: Array1<f64>,
    pub v: Array1<f64>,
    pub k: usize,
    pub gamma: f64,
}

impl IterState {
    /// `x₁ = 0`, `v₁ = 0`.
    pub fn zeros(spec: &ProblemSpec, gamma: f64) -> Self {
        IterState {
            x: Array1::zeros(spec.dim()),
            v: Array1::zeros(spec.operator().n_rows()),
            k: 1,
            gamma,
        }
    }

    fn check(&self, spec: &ProblemSpec) -> Result<()> {
        check_len("primal iterate", spec.dim(), self.x.len())?;
        check_len("dual iterate", spec.operator().n_rows(), self.v.len())?;
        if self.k == 0 {
            return Err(Error::InvalidArgument("iteration counter starts at 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Step schedule; PDFP uses `schedule.c()` as its constant step.
    pub schedule: StepSchedule,
    pub lambda: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub max_epochs: usize,
    /// PDFP stops once the fixed-point residual drops to this value; `0` disables.
    pub stop_tolerance: f64,
}

impl SolverConfig {
    /// `1 / ρ_max(BBᵀ)`, infinite for an operator without rows.
    pub fn lambda_limit(operator: &SparseMatrix) -> Result<f64> {
        if operator.n_rows() == 0 || operator.nnz() == 0 {
            return Ok(f64::INFINITY);
        }
        let (rho, _) = largest_gram_eigenvalue(operator, 1e-10, 1_000_000)?;
        Ok(1.0 / rho)
    }

    /// Checks `0 < λ < 1/ρ_max(BBᵀ)` and the batch size against `spec`.
    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        check_lambda(self.lambda)?;
        let limit = Self::lambda_limit(spec.operator())?;
        if self.lambda >= limit {
            return Err(Error::InvalidLambda {
                lambda: self.lambda,
                limit,
            });
        }
        if self.batch_size == 0 || self.batch_size > spec.n_samples() {
            return Err(Error::InvalidArgument(format!(
                "batch size must lie in 1..={}, got {}",
                spec.n_samples(),
                self.batch_size
            )));
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidLambda {
            lambda,
            limit: f64::INFINITY,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Pdfp,
    Spdfp1,
    Spdfp2,
    StocAdmm,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Pdfp => "pdfp",
            SolverKind::Spdfp1 => "spdfp1",
            SolverKind::Spdfp2 => "spdfp2",
            SolverKind::StocAdmm => "stoc_admm",
        }
    }

    pub fn is_stochastic(self) -> bool {
        self != SolverKind::Pdfp
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "pdfp" => Ok(SolverKind::Pdfp),
            "spdfp1" | "spdfp_alg1" => Ok(SolverKind::Spdfp1),
            "spdfp2" | "spdfp_alg2" | "spdfp" => Ok(SolverKind::Spdfp2),
            "stoc_admm" | "admm" => Ok(SolverKind::StocAdmm),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

/// `(I - Prox_{τ f1})(B x_half + v - λ B(Bᵀ v))`, the dual update shared by
/// every primal-dual fixed-point variant.
pub(crate) fn dual_residual<P: ProximalMap + ?Sized>(
    b: &SparseMatrix,
    prox: &P,
    tau: f64,
    lambda: f64,
    x_half: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
) -> Array1<f64> {
    let mut bt_v = Array1::zeros(b.n_cols());
    b.matvec_transpose_into(v, bt_v.view_mut());
    let mut bbt_v = Array1::zeros(b.n_rows());
    b.matvec_into(bt_v.view(), bbt_v.view_mut());
    let mut w = Array1::zeros(b.n_rows());
    b.matvec_into(x_half, w.view_mut());
    w += &v;
    w.scaled_add(-lambda, &bbt_v);

    let mut p = Array1::zeros(w.len());
    prox.prox_into(tau, w.view(), p.view_mut());
    w - p
}

/// Converts a PDFP dual (scale `γ/λ` relative to `∂f1(Bx)`) to the
/// subgradient scale used by the error metrics.
pub fn pdfp_dual_to_subgradient(v: ArrayView1<'_, f64>, gamma: f64, lambda: f64) -> Array1<f64> {
    &v * (lambda / gamma)
}
