use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

use super::{CostMatrix, Marginals};

/// Sparse integral flow matrix in compressed-row form. Zero entries are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<u64>,
}

impl FlowMatrix {
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets in any order. Zero values are
    /// dropped and duplicate positions are summed. Panics on out-of-range
    /// indices.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: impl IntoIterator<Item = (usize, usize, u64)>) -> Self {
        let triplets: Vec<_> = triplets.into_iter().filter(|t| t.2 > 0).collect();
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, j, _) in &triplets {
            assert!(i < n_rows && j < n_cols, "entry ({i}, {j}) outside {n_rows}x{n_cols}");
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut slots = vec![(0usize, 0u64); triplets.len()];
        for (i, j, v) in triplets {
            slots[next[i]] = (j, v);
            next[i] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(slots.len());
        let mut values = Vec::with_capacity(slots.len());
        row_ptr.push(0);
        for i in 0..n_rows {
            let row = &mut slots[counts[i]..counts[i + 1]];
            row.sort_unstable_by_key(|e| e.0);
            for &(j, v) in row.iter() {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(rows: &[Vec<u64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self::from_triplets(
            rows.len(),
            n_cols,
            rows.iter()
                .enumerate()
                .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v))),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => 0,
        }
    }

    /// Nonzero entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.col_idx[p], self.values[p]))
        })
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.n_rows)
            .map(|i| self.values[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.n_cols];
        for (&j, &v) in self.col_idx.iter().zip(&self.values) {
            sums[j] += v;
        }
        sums
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        self.iter().filter(|&(i, j, _)| i == j).map(|e| e.2).sum()
    }

    /// True when row sums equal `gamma` and column sums equal `eta`.
    pub fn satisfies(&self, m: &Marginals) -> bool {
        self.n_rows == m.n() && self.n_cols == m.n() && self.row_sums() == m.gamma() && self.col_sums() == m.eta()
    }

    /// `Σ c_ij x_ij`.
    pub fn cost<T: Scalar>(&self, c: &CostMatrix<T>) -> T {
        self.iter().map(|(i, j, v)| c.get(i, j) * T::from_count(v)).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0u64; self.n_cols]; self.n_rows];
        for (i, j, v) in self.iter() {
            out[i][j] = v;
        }
        out
    }

    pub fn to_matrix<T: Scalar>(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.iter() {
            out[(i, j)] = T::from_count(v);
        }
        out
    }

    /// Relabels rows and columns: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of `self`. Square matrices only.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(self.n_rows, self.n_cols);
        assert_eq!(perm.len(), self.n_rows);
        let mut inverse = vec![0usize; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        Self::from_triplets(
            self.n_rows,
            self.n_cols,
            self.iter().map(|(i, j, v)| (inverse[i], inverse[j], v)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_sorted_merged_and_sparse() {
        let f = FlowMatrix::from_triplets(2, 3, vec![(1, 2, 4), (0, 1, 1), (0, 0, 0), (0, 1, 2), (1, 0, 5)]);
        assert_eq!(f.nnz(), 3);
        assert_eq!(f.to_dense(), vec![vec![0, 3, 0], vec![5, 0, 4]]);
        assert_eq!(f.get(0, 0), 0);
        assert_eq!(f.get(1, 2), 4);
        assert_eq!(f.row_sums(), vec![3, 9]);
        assert_eq!(f.col_sums(), vec![5, 3, 4]);
        assert_eq!(f.iter().collect::<Vec<_>>(), vec![(0, 1, 3), (1, 0, 5), (1, 2, 4)]);
    }

    #[test]
    fn permutation_relabels_both_axes() {
        let f = FlowMatrix::from_dense(&[vec![2, 1, 0], vec![0, 1, 0], vec![0, 0, 7]]);
        let p = f.permuted(&[2, 0, 1]);
        assert_eq!(p.to_dense(), vec![vec![7, 0, 0], vec![0, 2, 1], vec![0, 0, 1]]);
        assert_eq!(p.trace(), f.trace());
    }
}
