use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Compressed-row sparse matrix of `f64`.
///
/// Column indices are strictly increasing within each row and every stored
/// value is nonzero and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            indptr: vec![0; n_rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and entries that end up zero are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, v) in &entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Dimension(format!(
                    "entry ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse triplet"));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
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
                rows.push(r);
                indices.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            indptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(dense: &DenseMatrix) -> Result<Self> {
        let triplets = (0..dense.n_rows()).flat_map(|r| {
            dense
                .row(r)
                .iter()
                .enumerate()
                .map(move |(c, &v)| (r, c, v))
                .collect::<Vec<_>>()
        });
        Self::from_triplets(dense.n_rows(), dense.n_cols(), triplets)
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

    pub fn row_indices(&self, row: usize) -> &[usize] {
        &self.indices[self.indptr[row]..self.indptr[row + 1]]
    }

    pub fn row_values(&self, row: usize) -> &[f64] {
        &self.values[self.indptr[row]..self.indptr[row + 1]]
    }

    /// Iterates the stored `(col, value)` pairs of a row.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_indices(row)
            .iter()
            .copied()
            .zip(self.row_values(row).iter().copied())
    }

    pub fn row_nnz(&self, row: usize) -> usize {
        self.indptr[row + 1] - self.indptr[row]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        match self.row_indices(row).binary_search(&col) {
            Ok(pos) => self.row_values(row)[pos],
            Err(_) => 0.0,
        }
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                let slot = next[c];
                indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            indptr,
            indices,
            values,
        }
    }

    /// Per-column sums.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for (&c, &v) in self.indices.iter().zip(&self.values) {
            sums[c] += v;
        }
        sums
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.row_values(r).iter().sum())
            .collect()
    }

    /// Number of stored entries per column.
    pub fn col_nnz(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_cols];
        for &c in &self.indices {
            counts[c] += 1;
        }
        counts
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self * rhs` for a dense right-hand side.
    pub fn mul_dense(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if rhs.n_rows() != self.n_cols {
            return Err(Error::Dimension(format!(
                "sparse {}x{} times dense {}x{}",
                self.n_rows,
                self.n_cols,
                rhs.n_rows(),
                rhs.n_cols()
            )));
        }
        let width = rhs.n_cols();
        let mut out = DenseMatrix::zeros(self.n_rows, width);
        for r in 0..self.n_rows {
            let dst = out.row_mut(r);
            for (c, v) in self.row(r) {
                for (d, s) in dst.iter_mut().zip(rhs.row(c)) {
                    *d += v * s;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * rhs` without materializing the transpose.
    pub fn tmul_dense(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if rhs.n_rows() != self.n_rows {
            return Err(Error::Dimension(format!(
                "sparse^T {}x{} times dense {}x{}",
                self.n_cols,
                self.n_rows,
                rhs.n_rows(),
                rhs.n_cols()
            )));
        }
        let width = rhs.n_cols();
        let mut out = DenseMatrix::zeros(self.n_cols, width);
        for r in 0..self.n_rows {
            let src = rhs.row(r);
            for (c, v) in self.row(r) {
                for (d, s) in out.row_mut(c).iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        Ok(out)
    }

    /// Applies `f` to every stored value, dropping entries mapped to zero.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<SparseMatrix> {
        let triplets: Vec<_> = self
            .triplets()
            .map(|(r, c, v)| (r, c, f(r, c, v)))
            .collect();
        Self::from_triplets(self.n_rows, self.n_cols, triplets)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (r, c, v) in self.triplets() {
            out[(r, c)] = v;
        }
        out
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.indptr, &self.indices, &self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed_and_zeros_dropped() {
        let m = SparseMatrix::from_triplets(
            2,
            3,
            vec![(0, 2, 1.0), (0, 0, 2.0), (0, 2, 4.0), (1, 1, 3.0), (1, 1, -3.0)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 2), 5.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.row_indices(0), &[0, 2]);
    }

    #[test]
    fn rejects_out_of_bounds_and_nan() {
        assert!(SparseMatrix::from_triplets(1, 1, vec![(1, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(1, 1, vec![(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn transpose_and_products_agree_with_dense() {
        let m = SparseMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (1, 1, 2.0), (2, 0, -1.0), (2, 1, 0.5)],
        )
        .unwrap();
        let t = m.transpose();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.get(1, 2), 0.5);
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let y = m.mul_dense(&x).unwrap();
        assert_eq!(y.row(2), &[-1.0 + 1.5, -2.0 + 2.0]);
        let z = DenseMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]);
        let w = m.tmul_dense(&z).unwrap();
        assert_eq!(w.col(0), vec![0.0, 2.5]);
    }
}
