//! Row-compressed sparse matrices.
//!
//! Storage is canonical: column indices within a row are strictly increasing,
//! duplicates are summed on construction and exact zeros are never stored.
//! All products accumulate in storage order so results are bit-reproducible.

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// An all-zero matrix (no stored entries).
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        // from_triplets cannot fail here: indices are in range by construction
        Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &d)| (i, i, d)))
            .expect("diagonal triplets are in range")
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    ///
    /// Duplicate positions are summed; entries that are (or sum to) exactly
    /// zero are dropped. Non-finite values are rejected.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidDimension(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite value {v} at ({r}, {c})"
                )));
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut iter = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a matrix from dense rows, dropping zeros.
    pub fn from_dense_rows(n_cols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut triplets = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            check_len("dense row", n_cols, row.len())?;
            triplets.extend(row.iter().enumerate().map(|(c, &v)| (r, c, v)));
        }
        Self::from_triplets(rows.len(), n_cols, triplets)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0 || self.n_cols == 0
    }

    /// Column indices and values stored in row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if r >= self.n_rows || c >= self.n_cols {
            return 0.0;
        }
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Inner product of row `r` with `x`.
    #[inline]
    pub fn row_dot(&self, r: usize, x: ArrayView1<'_, f64>) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
    }

    /// `out += scale * row_r`.
    #[inline]
    pub fn add_row_scaled(&self, r: usize, scale: f64, mut out: ArrayViewMut1<'_, f64>) {
        let (cols, vals) = self.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            out[c] += scale * v;
        }
    }

    pub fn matvec(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        check_len("matvec", self.n_cols, x.len())?;
        let mut out = Array1::zeros(self.n_rows);
        self.matvec_into(x, out.view_mut());
        Ok(out)
    }

    /// `out = M x`; lengths must already agree.
    pub fn matvec_into(&self, x: ArrayView1<'_, f64>, mut out: ArrayViewMut1<'_, f64>) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows);
        for r in 0..self.n_rows {
            out[r] = self.row_dot(r, x);
        }
    }

    pub fn matvec_transpose(&self, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        check_len("transposed matvec", self.n_rows, y.len())?;
        let mut out = Array1::zeros(self.n_cols);
        self.matvec_transpose_into(y, out.view_mut());
        Ok(out)
    }

    /// `out = Mᵀ y`; lengths must already agree.
    pub fn matvec_transpose_into(&self, y: ArrayView1<'_, f64>, mut out: ArrayViewMut1<'_, f64>) {
        debug_assert_eq!(y.len(), self.n_rows);
        debug_assert_eq!(out.len(), self.n_cols);
        out.fill(0.0);
        for r in 0..self.n_rows {
            let yr = y[r];
            if yr != 0.0 {
                self.add_row_scaled(r, yr, out.view_mut());
            }
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows visited in increasing order keep the new column indices sorted
        for (r, c, v) in self.triplets() {
            let slot = next[c];
            col_idx[slot] = r;
            values[slot] = v;
            next[c] += 1;
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &SparseMatrix) -> Result<SparseMatrix> {
        check_len("vertical stack columns", self.n_cols, below.n_cols)?;
        let offset = self.nnz();
        let mut row_ptr = self.row_ptr.clone();
        row_ptr.extend(below.row_ptr[1..].iter().map(|p| p + offset));
        let mut col_idx = self.col_idx.clone();
        col_idx.extend_from_slice(&below.col_idx);
        let mut values = self.values.clone();
        values.extend_from_slice(&below.values);
        Ok(SparseMatrix {
            n_rows: self.n_rows + below.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// The sub-matrix made of the rows in `rows`.
    pub fn row_block(&self, rows: Range<usize>) -> SparseMatrix {
        assert!(rows.end <= self.n_rows, "row block out of range");
        let start = self.row_ptr[rows.start];
        let end = self.row_ptr[rows.end];
        SparseMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            row_ptr: self.row_ptr[rows.start..=rows.end]
                .iter()
                .map(|p| p - start)
                .collect(),
            col_idx: self.col_idx[start..end].to_vec(),
            values: self.values[start..end].to_vec(),
        }
    }

    pub fn scaled(&self, t: f64) -> SparseMatrix {
        if t == 0.0 {
            return Self::zeros(self.n_rows, self.n_cols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= t);
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for (r, c, v) in self.triplets() {
            out[[r, c]] = v;
        }
        out
    }

    /// Dense `MᵀM` (n_cols × n_cols).
    pub fn gram_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_cols, self.n_cols));
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&i, &vi) in cols.iter().zip(vals) {
                for (&j, &vj) in cols.iter().zip(vals) {
                    out[[i, j]] += vi * vj;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let m = SparseMatrix::from_triplets(
            2,
            3,
            vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 3.0), (0, 0, 0.0), (1, 0, 1.0), (1, 0, -1.0)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 2), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.row(1).0, &[2]);
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        let err = SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidDimension(_)));
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn matvec_and_transpose() {
        let m = SparseMatrix::from_dense_rows(3, &[vec![1.0, 0.0, 2.0], vec![0.0, -1.0, 3.0]])
            .unwrap();
        let x = array![1.0, 2.0, 3.0];
        assert_eq!(m.matvec(x.view()).unwrap(), array![7.0, 7.0]);
        let y = array![1.0, -1.0];
        assert_eq!(m.matvec_transpose(y.view()).unwrap(), array![1.0, 1.0, -1.0]);
        assert_eq!(m.transpose().to_dense(), m.to_dense().t());
        assert!(m.matvec(y.view()).is_err());
    }

    #[test]
    fn vstack_and_row_block() {
        let a = SparseMatrix::from_dense_rows(2, &[vec![1.0, 0.0]]).unwrap();
        let b = SparseMatrix::identity(2);
        let s = a.vstack(&b).unwrap();
        assert_eq!(s.n_rows(), 3);
        assert_eq!(s.to_dense(), array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(s.row_block(1..3), b);
        assert_eq!(s.row_block(0..0).n_rows(), 0);
    }

    #[test]
    fn gram_matches_dense_product() {
        let m = SparseMatrix::from_dense_rows(3, &[vec![1.0, 0.0, 2.0], vec![0.0, -1.0, 3.0]])
            .unwrap();
        let d = m.to_dense();
        assert_eq!(m.gram_dense(), d.t().dot(&d));
    }
}
