//! Dense symmetric positive definite solves.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{check_len, Error, Result};

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    pub fn factor(m: &Array2<f64>) -> Result<Self> {
        let n = m.nrows();
        check_len("cholesky (square matrix)", n, m.ncols())?;
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = m[[j, j]];
            for k in 0..j {
                diag -= l[[j, k]] * l[[j, k]];
            }
            if !(diag > 0.0) {
                return Err(Error::SingularSystem { column: j, pivot: diag });
            }
            let ljj = diag.sqrt();
            l[[j, j]] = ljj;
            for i in j + 1..n {
                let mut s = m[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / ljj;
            }
        }
        Ok(Cholesky { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn solve(&self, rhs: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let n = self.dim();
        check_len("cholesky solve", n, rhs.len())?;
        let l = &self.lower;
        let mut y = rhs.to_owned();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[[i, k]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[[k, i]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        Ok(y)
    }
}
