//! Full and mini-batch gradients of the smooth term `f2`.

use std::ops::Range;

use ndarray::{Array1, ArrayView1, ArrayViewMut1};
use rand::{Rng, RngExt};

use crate::error::{check_len, Error, Result};
use crate::problem::{Loss, ProblemSpec};
use crate::spectral::largest_gram_eigenvalue;

/// Contiguous partition of the sample indices `0..n` into batches of size
/// `p`. When `p` does not divide `n` the last batch holds the remainder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    n: usize,
    p: usize,
    batches: Vec<Range<usize>>,
}

impl BatchPlan {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::InvalidArgument(format!(
                "batch size must satisfy 1 <= p <= n = {n}, got {p}"
            )));
        }
        let batches = (0..n).step_by(p).map(|s| s..(s + p).min(n)).collect();
        Ok(BatchPlan { n, p, batches })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn batch_size(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn batches(&self) -> &[Range<usize>] {
        &self.batches
    }

    pub fn batch(&self, i: usize) -> Option<Range<usize>> {
        self.batches.get(i).cloned()
    }

    /// Sampling probability of batch `i`: its size over `n`.
    pub fn probability(&self, i: usize) -> f64 {
        self.batches[i].len() as f64 / self.n as f64
    }

    /// Draws a batch with probability proportional to its size, by picking a
    /// uniform sample index and returning the batch that holds it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let j = rng.random_range(0..self.n);
        j / self.p
    }
}

pub fn make_batch_plan(n: usize, p: usize) -> Result<BatchPlan> {
    BatchPlan::new(n, p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradSample {
    pub batch_index: usize,
    pub gradient: Array1<f64>,
}

/// `out += Σ_{j ∈ rows} ∇φ_j(x)`
fn accumulate_loss_gradient(
    spec: &ProblemSpec,
    rows: Range<usize>,
    x: ArrayView1<'_, f64>,
    mut out: ArrayViewMut1<'_, f64>,
) {
    let a = spec.dataset().samples();
    let b = spec.dataset().labels();
    let loss = spec.loss();
    for j in rows {
        let coef = loss.derivative(a.row_dot(j, x), b[j]);
        if coef != 0.0 {
            a.add_row_scaled(j, coef, out.view_mut());
        }
    }
}

/// Mean gradient over `rows` plus the `νx` term, written into `out`.
pub(crate) fn batch_gradient_into(
    spec: &ProblemSpec,
    rows: Range<usize>,
    x: ArrayView1<'_, f64>,
    mut out: ArrayViewMut1<'_, f64>,
) {
    out.fill(0.0);
    let count = rows.len() as f64;
    accumulate_loss_gradient(spec, rows, x, out.view_mut());
    out /= count;
    let nu = spec.l2_weight();
    if nu != 0.0 {
        out.scaled_add(nu, &x);
    }
}

/// `∇f2(x) = (1/n) Σ_j ∇φ_j(x) + νx`
pub fn full_gradient(spec: &ProblemSpec, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_len("gradient argument", spec.dim(), x.len())?;
    let mut out = Array1::zeros(spec.dim());
    batch_gradient_into(spec, 0..spec.n_samples(), x, out.view_mut());
    Ok(out)
}

/// Mean gradient over batch `i` of `plan`, plus `νx`.
pub fn stochastic_gradient(
    spec: &ProblemSpec,
    plan: &BatchPlan,
    i: usize,
    x: ArrayView1<'_, f64>,
) -> Result<GradSample> {
    check_len("gradient argument", spec.dim(), x.len())?;
    check_len("batch plan sample count", spec.n_samples(), plan.n())?;
    let rows = plan.batch(i).ok_or_else(|| {
        Error::InvalidArgument(format!("batch index {i} out of range (0..{})", plan.len()))
    })?;
    let mut gradient = Array1::zeros(spec.dim());
    batch_gradient_into(spec, rows, x, gradient.view_mut());
    Ok(GradSample {
        batch_index: i,
        gradient,
    })
}

/// Constants `C1`, `C2` bounding `E‖∇f2^{[i]}(x)‖² ≤ C1‖x‖² + C2` for the
/// square loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceConstants {
    /// `max_j ρ_max(A_j A_jᵀ)` over the batch blocks `A_j`.
    pub l_p: f64,
    /// `2 L_p² / p²`
    pub c1: f64,
    /// `2 L_p ‖b‖² / (n p)`
    pub c2: f64,
}

impl VarianceConstants {
    pub fn from_lp(l_p: f64, n: usize, p: usize, b_norm_sq: f64) -> Self {
        let (n, p) = (n as f64, p as f64);
        VarianceConstants {
            l_p,
            c1: 2.0 * l_p * l_p / (p * p),
            c2: 2.0 * l_p * b_norm_sq / (n * p),
        }
    }
}

/// Variance constants of the data term for square-loss problems.
///
/// The `νx` term is not covered by these constants.
pub fn variance_constants(spec: &ProblemSpec, plan: &BatchPlan) -> Result<VarianceConstants> {
    if spec.loss() != Loss::Square {
        return Err(Error::Unsupported(format!(
            "variance constants are derived for the square loss, not {}",
            spec.loss()
        )));
    }
    check_len("batch plan sample count", spec.n_samples(), plan.n())?;
    let a = spec.dataset().samples();
    let mut l_p: f64 = 0.0;
    for rows in plan.batches() {
        let block = a.row_block(rows.clone());
        if block.nnz() == 0 {
            continue;
        }
        let (rho, _) = largest_gram_eigenvalue(&block, 1e-12, 100_000)?;
        l_p = l_p.max(rho);
    }
    let b = spec.dataset().labels();
    Ok(VarianceConstants::from_lp(l_p, plan.n(), plan.batch_size(), b.dot(b)))
}
