//! Compressed sparse row matrix, built from triplets.

use crate::error::{Error, Result};
use std::io::Write;

/// Square or rectangular sparse matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<CsrMatrix> {
        for &(r, c, _) in &triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Dimension(format!(
                    "triplet ({r}, {c}) outside {n_rows} x {n_cols}"
                )));
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut counts = vec![0usize; n_rows];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if prev == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                counts[r] += 1;
                prev = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for r in 0..n_rows {
            row_ptr[r + 1] = row_ptr[r] + counts[r];
        }
        Ok(CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Number of columns.
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Stored entry count.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of one row as (columns, values).
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }

    /// Iterates all stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Writes the matrix as "row col value" lines for diffing.
    pub fn dump_coo<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (r, c, v) in self.iter() {
            writeln!(w, "{r} {c} {v:.17e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_and_multiplies() {
        let a = CsrMatrix::from_triplets(
            2,
            3,
            vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)],
        )
        .unwrap();
        assert_eq!(a.nnz(), 3);
        let mut y = vec![0.0; 2];
        a.mul_vec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.0, 3.0]);
    }

    #[test]
    fn sums_duplicate_triplets() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.5), (1, 0, 1.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        let mut y = vec![0.0; 2];
        a.mul_vec(&[2.0, 0.0], &mut y);
        assert_eq!(y, vec![7.0, 2.0]);
    }

    #[test]
    fn handles_empty_rows() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(2, 1, 4.0)]).unwrap();
        let mut y = vec![0.0; 3];
        a.mul_vec(&[0.0, 1.0, 0.0], &mut y);
        assert_eq!(y, vec![0.0, 0.0, 4.0]);
        assert_eq!(a.row(0).0.len(), 0);
        assert_eq!(a.row(1).0.len(), 0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(CsrMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn dump_is_sorted_row_major() {
        let a =
            CsrMatrix::from_triplets(2, 2, vec![(1, 0, 2.0), (0, 1, 1.0), (0, 0, 3.0)]).unwrap();
        let mut buf = Vec::new();
        a.dump_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert!(rows[0].starts_with("0 0"));
        assert!(rows[1].starts_with("0 1"));
        assert!(rows[2].starts_with("1 0"));
    }
}
