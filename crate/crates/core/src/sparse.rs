//! Row-major sparse matrices.
//!
//! Entries are kept in canonical `(row, col)` order in compressed-row form, so
//! extracting a row or computing `X · w` touches only that row's nonzeros.

use crate::error::{Error, Result};

/// A borrowed view of one matrix row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseRow<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseRow<'a> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Dot product with a dense vector.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(j, v)| v * dense[j]).sum()
    }

    /// Dot product with another sparse row (both sorted by column).
    pub fn dot_sparse(&self, other: &SparseRow<'_>) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }
}

/// Sparse real matrix with explicit dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// An all-zero matrix.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    ///
    /// Rejects out-of-range coordinates, duplicates and non-finite values.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(r, c, v) in &triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidEntry(format!(
                    "({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidEntry(format!("({r}, {c}) = {v}")));
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = triplets
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::InvalidEntry(format!(
                "duplicate coordinate ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted_unchecked(n_rows, n_cols, &triplets))
    }

    /// Builds a matrix from per-row `(col, value)` lists.
    pub fn from_rows(n_cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let triplets = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
            .collect();
        Self::from_triplets(rows.len(), n_cols, triplets)
    }

    fn from_sorted_unchecked(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut row_ptr = vec![0; n_rows + 1];
        for &(r, _, _) in triplets {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx: triplets.iter().map(|t| t.1).collect(),
            values: triplets.iter().map(|t| t.2).collect(),
        }
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

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        SparseRow {
            indices: &self.col_idx[span.clone()],
            values: &self.values[span],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseRow<'_>> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    /// All stored entries in canonical `(row, col)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).iter().map(move |(c, v)| (r, c, v)))
    }

    /// Value at `(row, col)`, zero when not stored.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let r = self.row(row);
        match r.indices.binary_search(&col) {
            Ok(k) => r.values[k],
            Err(_) => 0.0,
        }
    }

    /// `self · v` for a dense `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, vector has length {}",
                self.n_cols,
                v.len()
            )));
        }
        Ok(self.rows().map(|row| row.dot(v)).collect())
    }

    /// Sum of every column.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for (&c, &v) in self.col_idx.iter().zip(&self.values) {
            sums[c] += v;
        }
        sums
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (r, c, v) in self.entries() {
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

    /// The matrix restricted to `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let row = self.row(r);
            col_idx.extend_from_slice(row.indices);
            values.extend_from_slice(row.values);
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_rows != other.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {} rows beside {} rows",
                self.n_rows, other.n_rows
            )));
        }
        let offset = self.n_cols;
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.n_rows {
            let (a, b) = (self.row(r), other.row(r));
            col_idx.extend_from_slice(a.indices);
            values.extend_from_slice(a.values);
            col_idx.extend(b.indices.iter().map(|c| c + offset));
            values.extend_from_slice(b.values);
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols + other.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Appends one dense column; zeros in `column` are not stored.
    pub fn append_column(&self, column: &[f64]) -> Result<SparseMatrix> {
        if column.len() != self.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} for {} rows",
                column.len(),
                self.n_rows
            )));
        }
        let extra: Vec<_> = column
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(r, &v)| (r, 0, v))
            .collect();
        let col = SparseMatrix::from_triplets(self.n_rows, 1, extra)?;
        self.hstack(&col)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SparseMatrix {
        SparseMatrix::from_triplets(3, 3, vec![(2, 0, 4.0), (0, 2, 2.0), (0, 0, 1.0), (1, 1, 3.0)])
            .unwrap()
    }

    #[test]
    fn canonical_order() {
        let m = small();
        let e: Vec<_> = m.entries().collect();
        assert_eq!(e, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (2, 0, 4.0)]);
        assert_eq!(m.get(0, 2), 2.0);
        assert_eq!(m.get(2, 2), 0.0);
    }

    #[test]
    fn rejects_bad_triplets() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn mul_vec_and_transpose() {
        let m = small();
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]).unwrap(), vec![3.0, 3.0, 4.0]);
        let t = m.transpose();
        assert_eq!(t.get(2, 0), 2.0);
        assert_eq!(t.get(0, 2), 4.0);
        assert_eq!(t.transpose(), m);
        assert!(m.mul_vec(&[1.0]).is_err());
    }

    #[test]
    fn stacking_and_selection() {
        let m = small();
        let s = m.append_column(&[0.0, 5.0, 0.0]).unwrap();
        assert_eq!(s.n_cols(), 4);
        assert_eq!(s.get(1, 3), 5.0);
        assert_eq!(s.nnz(), m.nnz() + 1);
        let sel = m.select_rows(&[2, 0]);
        assert_eq!(sel.row(0).values, &[4.0]);
        assert_eq!(sel.row(1).indices, &[0, 2]);
    }

    #[test]
    fn row_products() {
        let a = SparseMatrix::from_rows(3, &[vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (2, 1.0)]]).unwrap();
        assert_eq!(a.row(0).dot_sparse(&a.row(1)), 1.0);
        assert_eq!(a.row(0).dot(&[2.0, 3.0, 4.0]), 5.0);
        assert_eq!(a.column_sums(), vec![2.0, 1.0, 1.0]);
    }
}
