//! Penalty operators used as the linear map inside `f1(Bx)`.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// First-difference operator on `R^d`: a `(d-1) x d` matrix with `-1` on
/// the diagonal and `+1` on the superdiagonal, so `(Bx)_i = x_{i+1} - x_i`.
pub fn build_difference_matrix(d: usize) -> Result<SparseMatrix> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "difference operator needs d >= 2, got {d}"
        )));
    }
    let triplets = (0..d - 1).flat_map(|i| [(i, i, -1.0), (i, i + 1, 1.0)]);
    SparseMatrix::from_triplets(d - 1, d, triplets)
}

/// Vertical stack `[G; I]` with `I` the identity on the column space of `G`.
pub fn stack_identity(g: &SparseMatrix) -> Result<SparseMatrix> {
    g.vstack(&SparseMatrix::identity(g.n_cols()))
}
