//! Compressed sparse column storage for stoichiometric matrices.

/// A sparse matrix stored column by column.
///
/// Row indices inside each column are strictly increasing and no explicit
/// zeros are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicate entries
    /// are summed, entries that end up exactly zero are dropped.
    ///
    /// Panics if a triplet lies outside the declared shape.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            columns[c].push((r, v));
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|&(r, _)| r);
            let mut iter = col.into_iter().peekable();
            while let Some((r, mut v)) = iter.next() {
                while let Some(&(r2, v2)) = iter.peek() {
                    if r2 != r {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != 0.0 {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Builds a matrix from dense row-major data.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let triplets = rows.iter().enumerate().flat_map(|(r, row)| {
            assert_eq!(row.len(), ncols, "ragged dense matrix");
            row.iter().enumerate().map(move |(c, &v)| (r, c, v))
        });
        Self::from_triplets(nrows, ncols, triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzero entries of column `j` as `(row, value)` pairs.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Matrix made of the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> CscMatrix {
        let mut col_ptr = Vec::with_capacity(cols.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for &j in cols {
            let range = self.col_ptr[j]..self.col_ptr[j + 1];
            row_idx.extend_from_slice(&self.row_idx[range.clone()]);
            values.extend_from_slice(&self.values[range]);
            col_ptr.push(row_idx.len());
        }
        CscMatrix {
            nrows: self.nrows,
            ncols: cols.len(),
            col_ptr,
            row_idx,
            values,
        }
    }

    /// `self * x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (r, v) in self.column(j) {
                y[r] += v * xj;
            }
        }
        y
    }

    /// `selfᵀ * y`
    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        (0..self.ncols)
            .map(|j| self.column(j).map(|(r, v)| v * y[r]).sum())
            .collect()
    }

    /// Rows that hold at least one nonzero.
    pub fn nonempty_rows(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nrows];
        for &r in &self.row_idx {
            seen[r] = true;
        }
        seen
    }

    /// Dense row-major copy.
    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.ncols]; self.nrows];
        for j in 0..self.ncols {
            for (r, v) in self.column(j) {
                rows[r][j] = v;
            }
        }
        rows
    }

    /// Iterates over all stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| self.column(j).map(move |(r, v)| (r, j, v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed_and_zeros_dropped() {
        let m = CscMatrix::from_triplets(2, 2, [(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (1, 1, -1.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn products_match_dense_arithmetic() {
        let rows = vec![vec![1.0, -1.0, 0.0], vec![0.0, 2.0, 3.0]];
        let m = CscMatrix::from_dense_rows(&rows);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![0.0, 5.0]);
        assert_eq!(m.transpose_mul_vec(&[1.0, 2.0]), vec![1.0, 3.0, 6.0]);
        assert_eq!(m.to_dense_rows(), rows);
    }

    #[test]
    fn column_selection_preserves_entries() {
        let m = CscMatrix::from_dense_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let s = m.select_columns(&[2, 0]);
        assert_eq!(s.to_dense_rows(), vec![vec![3.0, 1.0], vec![6.0, 4.0]]);
        let empty = m.select_columns(&[]);
        assert_eq!((empty.nrows(), empty.ncols()), (2, 0));
    }
}
