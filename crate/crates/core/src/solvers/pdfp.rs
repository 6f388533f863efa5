use ndarray::{Array1, ArrayView1};

use super::{check_lambda, dual_residual, IterState, SolverConfig};
use crate::error::{check_len, Result};
use crate::grad::full_gradient;
use crate::problem::ProblemSpec;
use crate::prox::ProximalMap;

/// One PDFP step with constant step `γ = cfg.schedule.c()`:
///
/// ```text
/// x_{k+½} = x_k - γ∇f2(x_k)
/// v_{k+1} = (I - Prox_{(γ/λ) f1})(B x_{k+½} + (I - λBBᵀ) v_k)
/// x_{k+1} = x_{k+½} - λ Bᵀ v_{k+1}
/// ```
pub fn pdfp_step<P: ProximalMap + ?Sized>(
    spec: &ProblemSpec,
    prox: &P,
    cfg: &SolverConfig,
    state: &IterState,
) -> Result<IterState> {
    state.check(spec)?;
    check_lambda(cfg.lambda)?;
    let gamma = cfg.schedule.c();
    let lambda = cfg.lambda;
    let b = spec.operator();

    let grad = full_gradient(spec, state.x.view())?;
    let x_half = &state.x - &(grad * gamma);
    let v = dual_residual(b, prox, gamma / lambda, lambda, x_half.view(), state.v.view());
    let bt_v = b.matvec_transpose(v.view())?;
    let x = x_half - bt_v * lambda;

    Ok(IterState {
        x,
        v,
        k: state.k + 1,
        gamma,
    })
}

/// Distance of `(x, v)` from the fixed-point equations of PDFP:
/// `‖v - T(x, v)‖ + ‖γ∇f2(x) + λBᵀT(x, v)‖` with
/// `T(x, v) = (I - Prox_{(γ/λ) f1})(B(x - γ∇f2(x)) + (I - λBBᵀ)v)`.
///
/// `v` is in the PDFP scale. The value is zero exactly at fixed pairs.
pub fn fixed_point_residual<P: ProximalMap + ?Sized>(
    spec: &ProblemSpec,
    prox: &P,
    gamma: f64,
    lambda: f64,
    x: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
) -> Result<f64> {
    check_len("primal iterate", spec.dim(), x.len())?;
    check_len("dual iterate", spec.operator().n_rows(), v.len())?;
    check_lambda(lambda)?;
    check_lambda(gamma)?;
    let b = spec.operator();

    let step = full_gradient(spec, x)? * gamma;
    let x_half = &x - &step;
    let t = dual_residual(b, prox, gamma / lambda, lambda, x_half.view(), v);
    let dual_gap = &v - &t;
    let primal_gap: Array1<f64> = step + b.matvec_transpose(t.view())? * lambda;
    Ok(dual_gap.dot(&dual_gap).sqrt() + primal_gap.dot(&primal_gap).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Dataset, Loss};
    use crate::prox::ProxSpec;
    use crate::solvers::StepSchedule;
    use crate::sparse::SparseMatrix;
    use ndarray::array;

    fn config(gamma: f64, lambda: f64) -> SolverConfig {
        SolverConfig {
            schedule: StepSchedule::new(gamma, 1.0).unwrap(),
            lambda,
            batch_size: 1,
            seed: 0,
            max_epochs: 1,
            stop_tolerance: 0.0,
        }
    }

    /// f2 = (1/2)·mean of (x_j - b_j)² over identity samples
    fn identity_spec(labels: Array1<f64>, mu: f64) -> ProblemSpec {
        let d = labels.len();
        let data = Dataset::new(SparseMatrix::identity(d), labels).unwrap();
        ProblemSpec::new(Loss::Square, data, 0.0, mu, SparseMatrix::identity(d)).unwrap()
    }

    #[test]
    fn zero_prox_reduces_to_gradient_descent() {
        let spec = identity_spec(array![1.0, -2.0, 0.5], 0.0);
        let cfg = config(0.8, 0.5);
        let mut state = IterState::zeros(&spec, 0.8);
        state.x = array![0.3, 0.1, -1.0];
        state.v = array![1.0, 2.0, 3.0];
        let next = pdfp_step(&spec, &ProxSpec::zero(), &cfg, &state).unwrap();
        let grad = full_gradient(&spec, state.x.view()).unwrap();
        assert_eq!(next.v, Array1::<f64>::zeros(3));
        assert_eq!(next.x, &state.x - &(grad * 0.8));
        assert_eq!(next.k, 2);
    }

    #[test]
    fn origin_is_fixed_without_gradient() {
        let spec = identity_spec(array![0.0, 0.0], 1.0);
        let cfg = config(0.5, 0.5);
        let state = IterState::zeros(&spec, 0.5);
        let next = pdfp_step(&spec, &ProxSpec::l1(1.0).unwrap(), &cfg, &state).unwrap();
        assert_eq!(next.x, state.x);
        assert_eq!(next.v, state.v);
    }

    #[test]
    fn residual_zero_at_origin_and_positive_elsewhere() {
        let spec = identity_spec(array![0.0, 0.0], 0.0);
        let zero = ProxSpec::zero();
        let origin = Array1::zeros(2);
        assert_eq!(
            fixed_point_residual(&spec, &zero, 0.5, 0.5, origin.view(), origin.view()).unwrap(),
            0.0
        );
        let r = fixed_point_residual(
            &spec,
            &zero,
            0.5,
            0.5,
            array![0.2, -1.0].view(),
            array![0.4, 0.0].view(),
        )
        .unwrap();
        assert!(r > 0.0);
    }

    #[test]
    fn invalid_inputs() {
        let spec = identity_spec(array![0.0, 0.0], 0.0);
        let zero = ProxSpec::zero();
        let mut state = IterState::zeros(&spec, 0.5);
        assert!(pdfp_step(&spec, &zero, &config(0.5, -1.0), &state).is_err());
        state.v = Array1::zeros(3);
        assert!(pdfp_step(&spec, &zero, &config(0.5, 0.5), &state).is_err());
        let x = Array1::zeros(2);
        assert!(fixed_point_residual(&spec, &zero, 0.5, 0.0, x.view(), x.view()).is_err());
    }
}
