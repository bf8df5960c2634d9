use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Dimension(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            for c in 0..n_cols {
                data.push(f(r, c));
            }
        }
        DenseMatrix {
            n_rows,
            n_cols,
            data,
        }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        DenseMatrix {
            n_rows: rows.len(),
            n_cols,
            data: rows.concat(),
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(n_rows: usize, cols: &[Vec<f64>]) -> Self {
        assert!(cols.iter().all(|c| c.len() == n_rows), "ragged columns");
        Self::from_fn(n_rows, cols.len(), |r, c| cols[c][r])
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        (0..self.n_rows).map(move |r| self.row(r))
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_col(&mut self, c: usize, values: &[f64]) {
        for (r, &v) in values.iter().enumerate() {
            self[(r, c)] = v;
        }
    }

    /// Copies columns `start..end`.
    pub fn columns(&self, start: usize, end: usize) -> DenseMatrix {
        Self::from_fn(self.n_rows, end - start, |r, c| self[(r, start + c)])
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.n_cols, self.n_rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != rhs.n_rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.n_rows, self.n_cols, rhs.n_rows, rhs.n_cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, rhs.n_cols);
        for r in 0..self.n_rows {
            let dst = &mut out.data[r * rhs.n_cols..(r + 1) * rhs.n_cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * rhs`.
    pub fn tmatmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_rows != rhs.n_rows {
            return Err(Error::Dimension(format!(
                "({}x{})^T times {}x{}",
                self.n_rows, self.n_cols, rhs.n_rows, rhs.n_cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_cols, rhs.n_cols);
        for r in 0..self.n_rows {
            let b = rhs.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &bv) in out.row_mut(i).iter_mut().zip(b) {
                    *d += a * bv;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(rhs)?;
        Ok(DenseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// `self += factor * rhs`.
    pub fn add_scaled(&mut self, factor: f64, rhs: &DenseMatrix) -> Result<()> {
        self.check_same_shape(rhs)?;
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, rhs: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, rhs: &DenseMatrix) -> Result<()> {
        if self.n_rows != rhs.n_rows || self.n_cols != rhs.n_cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.n_rows, self.n_cols, rhs.n_rows, rhs.n_cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.n_rows && c < self.n_cols);
        &self.data[r * self.n_cols + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.n_rows && c < self.n_cols);
        &mut self.data[r * self.n_cols + c]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales every nonzero row to unit Euclidean norm. Zero rows stay zero.
pub fn row_normalize(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    for r in 0..out.n_rows() {
        let row = out.row_mut(r);
        let n = norm(row);
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
    out
}

/// Solves `a x = b` for symmetric positive definite `a` via Cholesky.
pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n_rows();
    if a.n_cols() != n || b.len() != n {
        return Err(Error::Dimension("cholesky_solve expects a square system".into()));
    }
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::InvalidArgument(
                        "matrix is not positive definite".into(),
                    ));
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_normalize_three_four_five() {
        let m = DenseMatrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]]);
        let n = row_normalize(&m);
        assert!((n[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((n[(0, 1)] - 0.8).abs() < 1e-15);
        assert_eq!(n.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn row_normalize_leaves_unit_rows_alone() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.6, -0.8]]);
        assert!(row_normalize(&m).max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn matmul_shapes() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0]]);
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]);
        assert_eq!(a.matmul(&b).unwrap()[(0, 0)], 6.0);
        assert!(a.matmul(&a).is_err());
        assert_eq!(a.tmatmul(&a).unwrap()[(2, 1)], 6.0);
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let x = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-12);
        let bad = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(cholesky_solve(&bad, &[1.0, 1.0]).is_err());
    }
}
