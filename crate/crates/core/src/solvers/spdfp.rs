use rand::Rng;

use super::{check_lambda, dual_residual, IterState, SolverConfig};
use crate::error::Result;
use crate::grad::{stochastic_gradient, BatchPlan};
use crate::problem::ProblemSpec;
use crate::prox::ProximalMap;

/// Analysis form of the stochastic step. The dual lives on the subgradient
/// scale (`v* ∈ ∂f1(Bx*)`):
///
/// ```text
/// γ_k     = c / k^α
/// x_{k+½} = x_k - γ_k ∇f2^{[i_k]}(x_k)
/// v_{k+1} = (λ/γ_k)(I - Prox_{(γ_k/λ) f1})(B x_{k+½} + (I - λBBᵀ)(γ_k/λ) v_k)
/// x_{k+1} = x_{k+½} - γ_k Bᵀ v_{k+1}
/// ```
pub fn spdfp_step_alg1<P, R>(
    spec: &ProblemSpec,
    prox: &P,
    cfg: &SolverConfig,
    plan: &BatchPlan,
    state: &IterState,
    rng: &mut R,
) -> Result<IterState>
where
    P: ProximalMap + ?Sized,
    R: Rng + ?Sized,
{
    let batch = plan.sample(rng);
    spdfp_step_alg1_with_batch(spec, prox, cfg, plan, state, batch)
}

/// [`spdfp_step_alg1`] with the batch index `i_k` supplied by the caller.
pub fn spdfp_step_alg1_with_batch<P: ProximalMap + ?Sized>(
    spec: &ProblemSpec,
    prox: &P,
    cfg: &SolverConfig,
    plan: &BatchPlan,
    state: &IterState,
    batch: usize,
) -> Result<IterState> {
    state.check(spec)?;
    check_lambda(cfg.lambda)?;
    let lambda = cfg.lambda;
    let gamma = cfg.schedule.gamma(state.k);
    let b = spec.operator();

    let grad = stochastic_gradient(spec, plan, batch, state.x.view())?.gradient;
    let x_half = &state.x - &(grad * gamma);
    let v_scaled = &state.v * (gamma / lambda);
    let residual = dual_residual(b, prox, gamma / lambda, lambda, x_half.view(), v_scaled.view());
    let v = residual * (lambda / gamma);
    let x = x_half - b.matvec_transpose(v.view())? * gamma;

    let k = state.k + 1;
    Ok(IterState {
        x,
        v,
        k,
        gamma: cfg.schedule.gamma(k),
    })
}

/// Implementation form of the stochastic step. The dual is carried on the
/// scale `γ_{k-1}/λ` relative to [`spdfp_step_alg1`]:
///
/// ```text
/// x_{k+½} = x_k - γ_k ∇f2^{[i_k]}(x_k)
/// v_{k+1} = (I - Prox_{(γ_k/λ) f1})(B x_{k+½} + s_k (I - λBBᵀ) v_k)
/// x_{k+1} = x_{k+½} - λ Bᵀ v_{k+1}
/// ```
///
/// with `s_1 = γ_1/λ` and `s_k = ((k-1)/k)^α` for `k ≥ 2`.
pub fn spdfp_step_alg2<P, R>(
    spec: &ProblemSpec,
    prox: &P,
    cfg: &SolverConfig,
    plan: &BatchPlan,
    state: &IterState,
    rng: &mut R,
) -> Result<IterState>
where
    P: ProximalMap + ?Sized,
    R: Rng + ?Sized,
{
    let batch = plan.sample(rng);
    spdfp_step_alg2_with_batch(spec, prox, cfg, plan, state, batch)
}

/// [`spdfp_step_alg2`] with the batch index `i_k` supplied by the caller.
pub fn spdfp_step_alg2_with_batch<P: ProximalMap + ?Sized>(
    spec: &ProblemSpec,
    prox: &P,
    cfg: &SolverConfig,
    plan: &BatchPlan,
    state: &IterState,
    batch: usize,
) -> Result<IterState> {
    state.check(spec)?;
    check_lambda(cfg.lambda)?;
    let lambda = cfg.lambda;
    let k = state.k;
    let gamma = cfg.schedule.gamma(k);
    let b = spec.operator();

    let factor = if k == 1 {
        gamma / lambda
    } else {
        ((k - 1) as f64 / k as f64).powf(cfg.schedule.alpha())
    };

    let grad = stochastic_gradient(spec, plan, batch, state.x.view())?.gradient;
    let x_half = &state.x - &(grad * gamma);
    let v_scaled = &state.v * factor;
    let v = dual_residual(b, prox, gamma / lambda, lambda, x_half.view(), v_scaled.view());
    let x = x_half - b.matvec_transpose(v.view())? * lambda;

    Ok(IterState {
        x,
        v,
        k: k + 1,
        gamma: cfg.schedule.gamma(k + 1),
    })
}
