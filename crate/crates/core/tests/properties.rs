mod common;

use common::{dense_gaussian, random_problem, random_vec, rng, to_nalgebra};
use ndarray::Array1;
use proptest::prelude::*;
use rand::RngExt;
use spdfp_core::{
    estimate_spectrum, fit_rate, full_gradient, make_batch_plan, phi_c, stochastic_gradient,
    variance_constants, ErrorTrace, Loss, ProxSpec, ProximalMap, SparseMatrix,
};

fn random_sparse(seed: u64, rows: usize, cols: usize, density: f64) -> SparseMatrix {
    let mut r = rng(seed);
    let mut triplets = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if r.random::<f64>() < density {
                triplets.push((i, j, common::normal(&mut r)));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, triplets).unwrap()
}

fn loss_strategy() -> impl Strategy<Value = Loss> {
    prop_oneof![Just(Loss::Square), Just(Loss::Logistic), Just(Loss::Hinge)]
}

/// Golden-section minimizer of `h(x) + ½(x - y)²` where `h(x) = r w |x/r|`.
/// Values are compared through their difference with `a - b` factored out.
fn scaled_l1_oracle(w: f64, r: f64, y: f64) -> f64 {
    let diff = |a: f64, b: f64| {
        if a == b {
            return 0.0;
        }
        let abs_diff = if a.signum() == b.signum() {
            a.signum() * ((a - b) / r)
        } else {
            (a / r).abs() - (b / r).abs()
        };
        let slope = r * w * abs_diff / (a - b);
        (a - b) * (slope + 0.5 * (a + b) - y)
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-y.abs() - 1.0, y.abs() + 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    while hi - lo > 1e-13 * (1.0 + y.abs()) {
        if diff(a, b) < 0.0 {
            hi = b;
            b = a;
            a = hi - ratio * (hi - lo);
        } else {
            lo = a;
            a = b;
            b = lo + ratio * (hi - lo);
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matvec_is_adjoint_of_transpose(seed in any::<u64>(), rows in 1usize..30, cols in 1usize..30, density in 0.05f64..1.0) {
        let m = random_sparse(seed, rows, cols, density);
        let mut r = rng(seed ^ 1);
        let x = random_vec(&mut r, cols, 1.0);
        let y = random_vec(&mut r, rows, 1.0);
        let lhs = m.matvec(x.view()).unwrap().dot(&y);
        let rhs = x.dot(&m.matvec_transpose(y.view()).unwrap());
        let scale = 1.0 + lhs.abs().max(rhs.abs());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * (rows * cols) as f64);
        prop_assert_eq!(m.transpose().matvec(y.view()).unwrap(), m.matvec_transpose(y.view()).unwrap());
    }

    #[test]
    fn transpose_is_an_involution(seed in any::<u64>(), rows in 0usize..20, cols in 0usize..20) {
        let m = random_sparse(seed, rows, cols, 0.3);
        prop_assert_eq!(m.transpose().transpose(), m.clone());
        prop_assert_eq!(m.transpose().to_dense(), m.to_dense().t().to_owned());
    }

    #[test]
    fn rho_max_bounds_rayleigh_quotients(seed in any::<u64>(), rows in 1usize..15, cols in 1usize..15) {
        let b = random_sparse(seed, rows, cols, 0.5);
        prop_assume!(b.nnz() > 0);
        let est = estimate_spectrum(&b, 1e-12, 200_000).unwrap();
        let mut r = rng(seed ^ 2);
        for _ in 0..10 {
            let u = random_vec(&mut r, rows, 1.0);
            let btu = b.matvec_transpose(u.view()).unwrap();
            prop_assert!(est.rho_max >= btu.dot(&btu) / u.dot(&u) * (1.0 - 1e-9));
            let w = random_vec(&mut r, cols, 1.0);
            let bw = b.matvec(w.view()).unwrap();
            prop_assert!(est.rho_max >= bw.dot(&bw) / w.dot(&w) * (1.0 - 1e-9));
        }
    }

    #[test]
    fn objective_is_convex(seed in any::<u64>(), loss in loss_strategy(), t in 0.0f64..=1.0, nu in 0.0f64..1.0, mu in 0.0f64..1.0) {
        let spec = random_problem(seed, loss, 12, 5, nu, mu);
        let mut r = rng(seed ^ 3);
        let x = random_vec(&mut r, 5, 2.0);
        let y = random_vec(&mut r, 5, 2.0);
        let mid = &x * t + &y * (1.0 - t);
        let fx = spec.objective_value(x.view()).unwrap();
        let fy = spec.objective_value(y.view()).unwrap();
        let fm = spec.objective_value(mid.view()).unwrap();
        prop_assert!(fm <= t * fx + (1.0 - t) * fy + 1e-10 * (1.0 + fx.abs() + fy.abs()));
    }

    #[test]
    fn prox_and_residual_are_firmly_nonexpansive(seed in any::<u64>(), dim in 1usize..12, tau in 0.0f64..5.0, weight in 0.0f64..3.0) {
        let mut r = rng(seed);
        let y1 = random_vec(&mut r, dim, 3.0);
        let y2 = random_vec(&mut r, dim, 3.0);
        for spec in [ProxSpec::l1(weight).unwrap(), ProxSpec::zero()] {
            let dy = &y1 - &y2;
            let dp = spec.prox(tau, y1.view()).unwrap() - spec.prox(tau, y2.view()).unwrap();
            prop_assert!(dp.dot(&dp) <= dp.dot(&dy) + 1e-12);
            let dr = spec.prox_residual(tau, y1.view()).unwrap() - spec.prox_residual(tau, y2.view()).unwrap();
            prop_assert!(dr.dot(&dr) <= dr.dot(&dy) + 1e-12);
        }
    }

    #[test]
    fn moreau_decomposition_is_exact(seed in any::<u64>(), dim in 1usize..12, tau in 0.0f64..5.0, weight in 0.0f64..3.0) {
        let mut r = rng(seed);
        let y = random_vec(&mut r, dim, 10.0);
        let spec = ProxSpec::l1(weight).unwrap();
        let sum = spec.prox(tau, y.view()).unwrap() + spec.prox_residual(tau, y.view()).unwrap();
        prop_assert_eq!(sum, y);
    }

    #[test]
    fn scaled_prox_matches_scalar_oracle(seed in any::<u64>(), r_idx in 0usize..3, weight in 0.0f64..3.0) {
        let scale = [0.1, 1.0, 10.0][r_idx];
        let mut g = rng(seed);
        let y = random_vec(&mut g, 4, 3.0);
        let got = ProxSpec::l1(weight).unwrap().prox_scaled(scale, y.view()).unwrap();
        for (yi, gi) in y.iter().zip(got.iter()) {
            let oracle = scaled_l1_oracle(weight, scale, *yi);
            prop_assert!((oracle - gi).abs() < 1e-8, "{} vs {}", oracle, gi);
        }
    }

    #[test]
    fn minibatch_gradient_is_unbiased(seed in any::<u64>(), loss in loss_strategy(), p in 1usize..=24, nu in 0.0f64..1.0) {
        let n = 24;
        let spec = random_problem(seed, loss, n, 6, nu, 0.0);
        let plan = make_batch_plan(n, p).unwrap();
        let mut r = rng(seed ^ 4);
        let x = random_vec(&mut r, 6, 1.0);
        let mut mean = Array1::<f64>::zeros(6);
        for i in 0..plan.len() {
            let g = stochastic_gradient(&spec, &plan, i, x.view()).unwrap().gradient;
            mean.scaled_add(plan.probability(i), &g);
        }
        let full = full_gradient(&spec, x.view()).unwrap();
        let scale = 1.0 + full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(common::max_abs_diff(&mean, &full) <= 1e-12 * scale);
    }

    #[test]
    fn square_loss_variance_bound(seed in any::<u64>(), p_idx in 0usize..4) {
        let p = [1, 5, 10, 40][p_idx];
        let spec = random_problem(seed, Loss::Square, 40, 8, 0.0, 0.0);
        let plan = make_batch_plan(40, p).unwrap();
        let consts = variance_constants(&spec, &plan).unwrap();
        let mut r = rng(seed ^ 5);
        for _ in 0..5 {
            let x = random_vec(&mut r, 8, 3.0);
            let second_moment: f64 = (0..plan.len())
                .map(|i| {
                    let g = stochastic_gradient(&spec, &plan, i, x.view()).unwrap().gradient;
                    plan.probability(i) * g.dot(&g)
                })
                .sum();
            prop_assert!(consts.c1 * x.dot(&x) + consts.c2 - second_moment >= -1e-9);
        }
    }

    #[test]
    fn smooth_gradient_is_cocoercive_and_strongly_monotone(seed in any::<u64>(), logistic in any::<bool>(), nu in 0.0f64..2.0) {
        let loss = if logistic { Loss::Logistic } else { Loss::Square };
        let (n, d) = (15, 4);
        let spec = random_problem(seed, loss, n, d, nu, 0.0);
        let a = to_nalgebra(spec.dataset().samples());
        let gram = a.transpose() * &a / n as f64;
        let rho = gram.symmetric_eigenvalues().max();
        let lip = if logistic { 0.25 * rho } else { rho } + nu;
        let mut r = rng(seed ^ 6);
        let x = random_vec(&mut r, d, 2.0);
        let y = random_vec(&mut r, d, 2.0);
        let dg = full_gradient(&spec, x.view()).unwrap() - full_gradient(&spec, y.view()).unwrap();
        let dx = &x - &y;
        let inner = dg.dot(&dx);
        let tol = 1e-10 * (1.0 + inner.abs());
        prop_assert!(inner >= dg.dot(&dg) / lip - tol);
        prop_assert!(inner >= nu * dx.dot(&dx) - tol);
    }

    #[test]
    fn fit_rate_ignores_scale(slope in -2.0f64..0.0, t in 0.001f64..1000.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let points: Vec<(usize, f64)> = (1..=60)
            .map(|i| {
                let k = 10 * i;
                (k, (k as f64).powf(slope) * (1.0 + 0.1 * r.random::<f64>()))
            })
            .collect();
        let trace = ErrorTrace::new(points).unwrap();
        let base = fit_rate(&trace, 0.5).unwrap();
        let scaled = fit_rate(&trace.scaled(t), 0.5).unwrap();
        prop_assert!((base - scaled).abs() < 1e-9);
        prop_assert!((base - slope).abs() < 0.2);
    }

    #[test]
    fn phi_is_increasing(c in -3.0f64..3.0, t in 1e-3f64..1e3, dt in 1e-6f64..10.0) {
        prop_assert!(phi_c(c, t + dt).unwrap() >= phi_c(c, t).unwrap());
    }
}

#[test]
fn exact_power_law_has_exact_slope() {
    let points: Vec<(usize, f64)> = (1..=40).map(|k| (k * k, 3.0 * ((k * k) as f64).powf(-0.7))).collect();
    let slope = fit_rate(&ErrorTrace::new(points).unwrap(), 0.5).unwrap();
    assert!((slope + 0.7).abs() < 1e-12);
}

#[test]
fn dense_design_has_expected_shape() {
    let a = dense_gaussian(&mut rng(0), 7, 3);
    assert_eq!((a.n_rows(), a.n_cols(), a.nnz()), (7, 3, 21));
}

