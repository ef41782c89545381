use serde::{Deserialize, Serialize};

/// A borrowed input row, dense or sparse (sorted `(column, value)` pairs).
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse { dim: usize, entries: &'a [(usize, f64)] },
}

impl Row<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Row::Dense(v) => v.len(),
            Row::Sparse { dim, .. } => *dim,
        }
    }

    pub fn get(&self, j: usize) -> f64 {
        match self {
            Row::Dense(v) => v[j],
            Row::Sparse { entries, .. } => entries
                .binary_search_by_key(&j, |e| e.0)
                .map(|p| entries[p].1)
                .unwrap_or(0.0),
        }
    }

    pub fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        match self {
            Row::Dense(v) => v.iter().enumerate().filter(|(_, x)| **x != 0.0).for_each(|(j, &x)| f(j, x)),
            Row::Sparse { entries, .. } => entries.iter().for_each(|&(j, x)| f(j, x)),
        }
    }
}

/// Training matrix kept in both row-major and column-major sparse form.
/// Exact zeros are implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    row_cols: Vec<usize>,
    row_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_vals: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_dense(rows: &[Vec<f64>], n_cols: usize) -> Self {
        let sparse: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self::from_sparse(&sparse, n_cols)
    }

    /// Rows must hold column indices < `n_cols`, sorted and unique.
    pub fn from_sparse<R: AsRef<[(usize, f64)]>>(rows: &[R], n_cols: usize) -> Self {
        let mut row_ptr = vec![0];
        let mut row_cols = Vec::new();
        let mut row_vals = Vec::new();
        let mut col_counts = vec![0usize; n_cols];
        for r in rows {
            for &(j, v) in r.as_ref() {
                if v != 0.0 {
                    row_cols.push(j);
                    row_vals.push(v);
                    col_counts[j] += 1;
                }
            }
            row_ptr.push(row_cols.len());
        }
        let mut col_ptr = vec![0; n_cols + 1];
        for j in 0..n_cols {
            col_ptr[j + 1] = col_ptr[j] + col_counts[j];
        }
        let mut fill = col_ptr.clone();
        let mut col_rows = vec![0; row_cols.len()];
        let mut col_vals = vec![0.0; row_cols.len()];
        for i in 0..rows.len() {
            for p in row_ptr[i]..row_ptr[i + 1] {
                let j = row_cols[p];
                col_rows[fill[j]] = i;
                col_vals[fill[j]] = row_vals[p];
                fill[j] += 1;
            }
        }
        DesignMatrix {
            n_rows: rows.len(),
            n_cols,
            row_ptr,
            row_cols,
            row_vals,
            col_ptr,
            col_rows,
            col_vals,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row_entries(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.row_cols[a..b], &self.row_vals[a..b])
    }

    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.col_rows[a..b], &self.col_vals[a..b])
    }

    pub fn column_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row_entries(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_views_agree() {
        let rows = vec![vec![1.0, 0.0, 2.0], vec![0.0, 0.0, 3.0], vec![4.0, 5.0, 0.0]];
        let m = DesignMatrix::from_dense(&rows, 3);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                assert_eq!(m.get(i, j), v);
            }
        }
        assert_eq!(m.column(2), (&[0usize, 1][..], &[2.0, 3.0][..]));
        assert_eq!(m.column_nnz(1), 1);
        let entries = [(0usize, 1.0), (2, 2.0)];
        let row = Row::Sparse { dim: 3, entries: &entries };
        assert_eq!(row.get(2), 2.0);
        assert_eq!(row.get(1), 0.0);
    }
}
