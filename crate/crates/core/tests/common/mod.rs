#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::Array1;
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;
use spdfp_core::{
    build_difference_matrix, Dataset, Loss, ProblemSpec, ProxSpec, Run, SolverConfig, SolverKind,
    SparseMatrix, StepSchedule,
};

pub fn rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

pub fn normal(rng: &mut Pcg64) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_vec(rng: &mut Pcg64, len: usize, scale: f64) -> Array1<f64> {
    (0..len).map(|_| scale * normal(rng)).collect()
}

pub fn dense_gaussian(rng: &mut Pcg64, rows: usize, cols: usize) -> SparseMatrix {
    let data: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| normal(rng)).collect())
        .collect();
    SparseMatrix::from_dense_rows(cols, &data).unwrap()
}

pub fn labels_for(loss: Loss, rng: &mut Pcg64, n: usize) -> Array1<f64> {
    match loss {
        Loss::Square => random_vec(rng, n, 1.0),
        _ => (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
    }
}

/// Dense Gaussian design with a difference operator.
pub fn random_problem(seed: u64, loss: Loss, n: usize, d: usize, nu: f64, mu: f64) -> ProblemSpec {
    let mut r = rng(seed);
    let a = dense_gaussian(&mut r, n, d);
    let b = labels_for(loss, &mut r, n);
    ProblemSpec::new(loss, Dataset::new(a, b).unwrap(), nu, mu, build_difference_matrix(d).unwrap())
        .unwrap()
}

pub fn to_nalgebra(m: &SparseMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.n_rows(), m.n_cols());
    for (r, c, v) in m.triplets() {
        out[(r, c)] = v;
    }
    out
}

pub fn to_dvector(v: &Array1<f64>) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().copied())
}

pub fn pdfp_config(gamma: f64, lambda: f64, max_epochs: usize, tol: f64) -> SolverConfig {
    SolverConfig {
        schedule: StepSchedule::new(gamma, 1.0).unwrap(),
        lambda,
        batch_size: 1,
        seed: 0,
        max_epochs,
        stop_tolerance: tol,
    }
}

/// `(x*, v*)` with `v*` on the subgradient scale, from a long PDFP run.
pub fn pdfp_truth(spec: &ProblemSpec, prox: &ProxSpec, gamma: f64, iters: usize) -> (Array1<f64>, Array1<f64>) {
    let lambda = 0.9 * SolverConfig::lambda_limit(spec.operator()).unwrap();
    let mut cfg = pdfp_config(gamma, lambda, iters, 1e-14);
    cfg.batch_size = spec.n_samples();
    let out = Run::new(SolverKind::Pdfp, spec, prox, &cfg).execute().unwrap();
    (out.x, out.dual)
}

pub fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
