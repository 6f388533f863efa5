//! Extreme eigenvalues of `BBᵀ` by power iteration.

use ndarray::{Array1, ArrayView1};
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub rho_max: f64,
    /// Diagnostic only; zero when `B` has more rows than columns.
    pub rho_min: f64,
    pub iterations_used: usize,
    pub tolerance: f64,
    /// Whether the `rho_max` iteration met its residual tolerance.
    pub converged: bool,
    pub rho_min_converged: bool,
}

/// Largest and smallest eigenvalues of `BBᵀ`.
///
/// `rho_max` stops once the eigen-residual `‖BBᵀu - ρu‖` drops below
/// `tol * ρ`; `rho_min` comes from the same iteration on the shifted
/// operator `rho_max I - BBᵀ`.
pub fn estimate_spectrum(b: &SparseMatrix, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    check_args(b, tol)?;
    let (rho_max, it_max, converged) = largest_eigenvalue(b, tol, max_iter);
    let rho_max = rho_max.max(0.0);

    let m = b.n_rows();
    let (rho_min, it_min, rho_min_converged) = if m > b.n_cols() {
        (0.0, 0, true)
    } else {
        let shifted = |u: ArrayView1<'_, f64>| {
            let gram_u = apply_gram(b, u);
            &u * rho_max - gram_u
        };
        let (mu, it, ok) = power_iteration(shifted, m, tol, max_iter, rho_max);
        ((rho_max - mu).clamp(0.0, rho_max), it, ok)
    };

    Ok(SpectralEstimate {
        rho_max,
        rho_min,
        iterations_used: it_max + it_min,
        tolerance: tol,
        converged,
        rho_min_converged,
    })
}

/// `ρ_max(BBᵀ)` alone, iterating in whichever of the row or column space is
/// smaller (`BBᵀ` and `BᵀB` share their nonzero spectrum).
pub fn largest_gram_eigenvalue(b: &SparseMatrix, tol: f64, max_iter: usize) -> Result<(f64, bool)> {
    check_args(b, tol)?;
    let (rho, _, ok) = if b.n_rows() <= b.n_cols() {
        largest_eigenvalue(b, tol, max_iter)
    } else {
        largest_eigenvalue(&b.transpose(), tol, max_iter)
    };
    Ok((rho.max(0.0), ok))
}

fn check_args(b: &SparseMatrix, tol: f64) -> Result<()> {
    if b.is_empty() {
        return Err(Error::InvalidDimension(
            "spectrum of an empty operator".to_string(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// `B(Bᵀu)`
fn apply_gram(b: &SparseMatrix, u: ArrayView1<'_, f64>) -> Array1<f64> {
    let mut tmp = Array1::zeros(b.n_cols());
    b.matvec_transpose_into(u, tmp.view_mut());
    let mut out = Array1::zeros(b.n_rows());
    b.matvec_into(tmp.view(), out.view_mut());
    out
}

fn largest_eigenvalue(b: &SparseMatrix, tol: f64, max_iter: usize) -> (f64, usize, bool) {
    power_iteration(|u| apply_gram(b, u), b.n_rows(), tol, max_iter, 0.0)
}

/// Power iteration for a symmetric positive semidefinite operator.
/// Convergence is declared when the residual falls below `tol * max(|ρ|, scale)`.
fn power_iteration<F>(apply: F, dim: usize, tol: f64, max_iter: usize, scale: f64) -> (f64, usize, bool)
where
    F: Fn(ArrayView1<'_, f64>) -> Array1<f64>,
{
    // fixed pseudo-random start, never orthogonal to the dominant direction in practice
    let mut rng = Pcg64::seed_from_u64(0x5e_ed0f_5bec);
    let mut u: Array1<f64> = (0..dim).map(|_| rng.random_range(0.5..1.5)).collect();
    let norm = u.dot(&u).sqrt();
    u /= norm;

    let mut rho = 0.0;
    for it in 1..=max_iter {
        let w = apply(u.view());
        rho = u.dot(&w);
        let w_norm = w.dot(&w).sqrt();
        let diff = &w - &(&u * rho);
        let residual = diff.dot(&diff).sqrt();
        if residual <= tol * rho.abs().max(scale) || w_norm == 0.0 {
            return (rho, it, true);
        }
        u = w / w_norm;
    }
    (rho, max_iter, false)
}
