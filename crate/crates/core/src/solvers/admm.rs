use ndarray::{Array1, Array2};
use rand::Rng;

use super::StepSchedule;
use crate::error::{check_len, Error, Result};
use crate::grad::{stochastic_gradient, BatchPlan};
use crate::linalg::Cholesky;
use crate::problem::ProblemSpec;
use crate::prox::ProximalMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    /// Augmented-Lagrangian penalty `β̃`.
    pub beta_tilde: f64,
    /// Proximal weights `ζ_{k+1} = zeta_schedule.gamma(k)`.
    pub zeta_schedule: StepSchedule,
}

impl AdmmConfig {
    pub fn new(beta_tilde: f64, zeta_schedule: StepSchedule) -> Result<Self> {
        if !(beta_tilde > 0.0) || !beta_tilde.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta_tilde must be positive, got {beta_tilde}"
            )));
        }
        Ok(AdmmConfig {
            beta_tilde,
            zeta_schedule,
        })
    }

    /// `ζ_{k+1} = c / √k`.
    pub fn with_sqrt_decay(beta_tilde: f64, c: f64) -> Result<Self> {
        Self::new(beta_tilde, StepSchedule::new(c, 0.5)?)
    }
}

/// Primal `x_k`, split variable `y_k ≈ Bx_k` and multiplier `λ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Array1<f64>,
    pub y: Array1<f64>,
    pub multiplier: Array1<f64>,
    pub k: usize,
}

impl AdmmState {
    pub fn zeros(spec: &ProblemSpec) -> Self {
        let m = spec.operator().n_rows();
        AdmmState {
            x: Array1::zeros(spec.dim()),
            y: Array1::zeros(m),
            multiplier: Array1::zeros(m),
            k: 1,
        }
    }

    /// `‖Bx - y‖`
    pub fn feasibility_gap(&self, spec: &ProblemSpec) -> Result<f64> {
        let gap = spec.operator().matvec(self.x.view())? - &self.y;
        Ok(gap.dot(&gap).sqrt())
    }
}

/// Linearized stochastic ADMM for `min f2(x) + f1(y)` s.t. `Bx = y`:
///
/// ```text
/// x_{k+1} = (I/ζ_{k+1} + β̃BᵀB)⁻¹ [Bᵀ(β̃ y_k + λ_k) + x_k/ζ_{k+1} - ∇f2^{[i_k]}(x_k)]
/// y_{k+1} = Prox_{f1/β̃}(B x_{k+1} - λ_k/β̃)
/// λ_{k+1} = λ_k - β̃(B x_{k+1} - y_{k+1})
/// ```
///
/// The dense `BᵀB` is formed once; the system is refactored only when
/// `ζ` changes.
#[derive(Debug, Clone)]
pub struct StocAdmm {
    config: AdmmConfig,
    gram: Array2<f64>,
    factor: Option<(f64, Cholesky)>,
}

impl StocAdmm {
    pub fn new(spec: &ProblemSpec, config: AdmmConfig) -> Self {
        StocAdmm {
            config,
            gram: spec.operator().gram_dense(),
            factor: None,
        }
    }

    pub fn config(&self) -> &AdmmConfig {
        &self.config
    }

    fn system(&mut self, zeta: f64) -> Result<&Cholesky> {
        let stale = !matches!(&self.factor, Some((z, _)) if *z == zeta);
        if stale {
            let mut m = &self.gram * self.config.beta_tilde;
            m.diag_mut().mapv_inplace(|v| v + 1.0 / zeta);
            self.factor = Some((zeta, Cholesky::factor(&m)?));
        }
        Ok(&self.factor.as_ref().expect("factor was just set").1)
    }

    pub fn step<P, R>(
        &mut self,
        spec: &ProblemSpec,
        prox: &P,
        plan: &BatchPlan,
        state: &AdmmState,
        rng: &mut R,
    ) -> Result<AdmmState>
    where
        P: ProximalMap + ?Sized,
        R: Rng + ?Sized,
    {
        let batch = plan.sample(rng);
        self.step_with_batch(spec, prox, plan, state, batch)
    }

    pub fn step_with_batch<P: ProximalMap + ?Sized>(
        &mut self,
        spec: &ProblemSpec,
        prox: &P,
        plan: &BatchPlan,
        state: &AdmmState,
        batch: usize,
    ) -> Result<AdmmState> {
        let b = spec.operator();
        check_len("primal iterate", spec.dim(), state.x.len())?;
        check_len("split variable", b.n_rows(), state.y.len())?;
        check_len("multiplier", b.n_rows(), state.multiplier.len())?;
        let beta = self.config.beta_tilde;
        let zeta = self.config.zeta_schedule.gamma(state.k);

        let grad = stochastic_gradient(spec, plan, batch, state.x.view())?.gradient;
        let dual_pull = &state.y * beta + &state.multiplier;
        let mut rhs = b.matvec_transpose(dual_pull.view())?;
        rhs.scaled_add(1.0 / zeta, &state.x);
        rhs -= &grad;
        let x = self.system(zeta)?.solve(rhs.view())?;

        let bx = b.matvec(x.view())?;
        let shifted = &bx - &(&state.multiplier / beta);
        let y = prox.prox(1.0 / beta, shifted.view())?;
        let multiplier = &state.multiplier - &((bx - &y) * beta);

        Ok(AdmmState {
            x,
            y,
            multiplier,
            k: state.k + 1,
        })
    }
}
