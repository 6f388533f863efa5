mod common;

use common::{max_abs_diff, pdfp_config, pdfp_truth, random_problem, to_nalgebra};
use ndarray::Array1;
use spdfp_core::{
    fixed_point_residual, full_gradient, make_batch_plan, pdfp_step, solver_rng, spdfp_step_alg1,
    spdfp_step_alg1_with_batch, stochastic_gradient, AdmmConfig, AdmmState, Error, IterState,
    Loss, ProxSpec, Reference, Run, SolverConfig, SolverKind, StepSchedule, StocAdmm,
};

fn smooth_lipschitz(spec: &spdfp_core::ProblemSpec) -> f64 {
    let a = to_nalgebra(spec.dataset().samples());
    let gram = a.transpose() * &a / spec.n_samples() as f64;
    gram.symmetric_eigenvalues().max() + spec.l2_weight()
}

#[test]
fn one_step_estimate_holds_in_exhaustive_expectation() {
    let spec = random_problem(11, Loss::Square, 12, 4, 0.5, 0.2);
    let prox = ProxSpec::l1(0.2).unwrap();
    let lip = smooth_lipschitz(&spec);
    let (x_star, v_star) = pdfp_truth(&spec, &prox, 0.5 / lip, 200_000);

    let b = to_nalgebra(spec.operator());
    let rho_min = (&b * b.transpose()).symmetric_eigenvalues().min();
    let lambda = 0.9 * SolverConfig::lambda_limit(spec.operator()).unwrap();
    let cfg = SolverConfig {
        schedule: StepSchedule::new(0.8, 0.7).unwrap(),
        lambda,
        batch_size: 3,
        seed: 0,
        max_epochs: 1,
        stop_tolerance: 0.0,
    };
    let plan = make_batch_plan(12, 3).unwrap();
    let grad_star = full_gradient(&spec, x_star.view()).unwrap();
    let sq = |a: &Array1<f64>| a.dot(a);

    let mut checked = 0;
    for seed in 0..4 {
        let mut rng = solver_rng(seed);
        let mut state = IterState::zeros(&spec, cfg.schedule.gamma(1));
        for _ in 0..500 {
            let k = state.k;
            let (g_k, g_next) = (cfg.schedule.gamma(k), cfg.schedule.gamma(k + 1));
            let dx = &state.x - &x_star;
            let dv = &state.v - &v_star;
            let grad = full_gradient(&spec, state.x.view()).unwrap();
            let mut lhs = 0.0;
            let mut variance = 0.0;
            for i in 0..plan.len() {
                let p = plan.probability(i);
                let next = spdfp_step_alg1_with_batch(&spec, &prox, &cfg, &plan, &state, i).unwrap();
                lhs += p * (sq(&(&next.x - &x_star)) + g_next * g_next / lambda * sq(&(&next.v - &v_star)));
                let gi = stochastic_gradient(&spec, &plan, i, state.x.view()).unwrap().gradient;
                variance += p * sq(&(gi - &grad_star));
            }
            let rhs = sq(&dx) + g_k * g_k / lambda * (1.0 - lambda * rho_min) * sq(&dv)
                - 2.0 * g_k * (&grad - &grad_star).dot(&dx)
                + g_k * g_k * variance;
            assert!(lhs <= rhs + 1e-6, "k = {k}: {lhs} > {rhs}");
            checked += 1;
            state = spdfp_step_alg1(&spec, &prox, &cfg, &plan, &state, &mut rng).unwrap();
        }
    }
    assert_eq!(checked, 2000);
}

#[test]
fn pdfp_solution_is_a_fixed_point() {
    let spec = random_problem(12, Loss::Square, 20, 6, 0.1, 0.3);
    let prox = ProxSpec::l1(0.3).unwrap();
    let gamma = 0.5 / smooth_lipschitz(&spec);
    let lambda = 0.9 * SolverConfig::lambda_limit(spec.operator()).unwrap();
    let mut cfg = pdfp_config(gamma, lambda, 20_000, 1e-13);
    cfg.batch_size = 20;
    let out = Run::new(SolverKind::Pdfp, &spec, &prox, &cfg).execute().unwrap();
    assert!(out.fixed_point_residual.unwrap() <= 1e-13);
    let state = IterState {
        x: out.x.clone(),
        v: out.native_dual.clone(),
        k: 1,
        gamma,
    };
    let next = pdfp_step(&spec, &prox, &cfg, &state).unwrap();
    assert!(max_abs_diff(&next.x, &out.x) < 1e-12);
    assert!(max_abs_diff(&next.v, &out.native_dual) < 1e-12);
    assert!(max_abs_diff(&out.dual, &(&out.native_dual * (lambda / gamma))) < 1e-15);
}

#[test]
fn pdfp_reaches_tolerance_on_tiny_instance() {
    let spec = random_problem(13, Loss::Square, 30, 5, 0.2, 0.1);
    let prox = ProxSpec::l1(0.1).unwrap();
    let gamma = 1.0 / smooth_lipschitz(&spec);
    let lambda = 0.9 * SolverConfig::lambda_limit(spec.operator()).unwrap();
    let mut cfg = pdfp_config(gamma, lambda, 3000, 1e-8);
    cfg.batch_size = 30;
    let out = Run::new(SolverKind::Pdfp, &spec, &prox, &cfg).execute().unwrap();
    assert!(out.stopped_early);
    let r = fixed_point_residual(&spec, &prox, gamma, lambda, out.x.view(), out.native_dual.view()).unwrap();
    assert!(r <= 1e-8);
    assert_eq!(out.fixed_point_residual, Some(r));
}

#[test]
fn lambda_at_or_above_limit_is_rejected() {
    let spec = random_problem(14, Loss::Square, 10, 4, 0.0, 0.1);
    let prox = ProxSpec::l1(0.1).unwrap();
    let limit = SolverConfig::lambda_limit(spec.operator()).unwrap();
    for kind in [SolverKind::Pdfp, SolverKind::Spdfp1, SolverKind::Spdfp2] {
        for lambda in [limit, 1.5 * limit, 0.0, -1.0] {
            let mut cfg = pdfp_config(0.1, lambda, 1, 0.0);
            cfg.batch_size = 2;
            let err = Run::new(kind, &spec, &prox, &cfg).execute().unwrap_err();
            assert!(matches!(err, Error::InvalidLambda { .. }), "{err}");
        }
    }
}

#[test]
fn runs_replay_with_the_same_seed() {
    let spec = random_problem(15, Loss::Logistic, 40, 5, 0.1, 0.05);
    let prox = ProxSpec::l1(0.05).unwrap();
    let lambda = 0.9 * SolverConfig::lambda_limit(spec.operator()).unwrap();
    let reference = Reference {
        x: Array1::zeros(5),
        v: Array1::zeros(4),
        objective: 1.0,
    };
    let cfg = SolverConfig {
        schedule: StepSchedule::new(0.5, 0.7).unwrap(),
        lambda,
        batch_size: 4,
        seed: 99,
        max_epochs: 5,
        stop_tolerance: 0.0,
    };
    for kind in [SolverKind::Spdfp1, SolverKind::Spdfp2, SolverKind::StocAdmm] {
        let run = || {
            let mut r = Run::new(kind, &spec, &prox, &cfg).reference(&reference);
            if kind == SolverKind::StocAdmm {
                r = r.admm(AdmmConfig::with_sqrt_decay(1.0, 0.5).unwrap());
            }
            r.execute().unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.x, b.x);
        let strip = |o: &spdfp_core::RunOutput| o.records.iter().map(|r| r.without_timing()).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.records.len(), 6);
        assert_eq!(a.records[5].iteration, 51);
    }
}

#[test]
fn zero_epochs_reports_the_initial_point_only() {
    let spec = random_problem(16, Loss::Hinge, 10, 3, 0.1, 0.1);
    let prox = ProxSpec::l1(0.1).unwrap();
    let lambda = 0.5 * SolverConfig::lambda_limit(spec.operator()).unwrap();
    let mut cfg = pdfp_config(0.1, lambda, 0, 0.0);
    cfg.batch_size = 5;
    for kind in [SolverKind::Pdfp, SolverKind::Spdfp2] {
        let out = Run::new(kind, &spec, &prox, &cfg).execute().unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].epoch, 0);
        assert_eq!(out.records[0].iteration, 1);
        assert_eq!(out.x, Array1::<f64>::zeros(3));
        assert_eq!(out.records[0].objective, spec.objective_value(out.x.view()).unwrap());
    }
}

#[test]
fn admm_feasibility_gap_shrinks() {
    let spec = random_problem(17, Loss::Square, 60, 6, 0.0, 0.1);
    let prox = ProxSpec::l1(0.1).unwrap();
    let plan = make_batch_plan(60, 6).unwrap();
    let mut admm = StocAdmm::new(&spec, AdmmConfig::with_sqrt_decay(5.0, 0.3).unwrap());
    let mut rng = solver_rng(3);
    let mut state = AdmmState::zeros(&spec);
    let mut early = 0.0;
    let mut late = 0.0;
    for k in 1..=4000 {
        state = admm.step(&spec, &prox, &plan, &state, &mut rng).unwrap();
        let gap = state.feasibility_gap(&spec).unwrap();
        if (1..=100).contains(&k) {
            early += gap / 100.0;
        }
        if k > 3900 {
            late += gap / 100.0;
        }
    }
    assert!(late < 0.5 * early, "{late} vs {early}");
}
