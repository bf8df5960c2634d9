//! Randomized truncated SVD for sparse matrices.
//!
//! Range finder with Gaussian test matrix, oversampling and power
//! iterations, followed by an exact one-sided Jacobi SVD of the small
//! projected problem.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, DenseMatrix, SparseMatrix};

#[derive(Debug, Clone, Copy)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 10,
            power_iters: 4,
        }
    }
}

/// Rank-k factorization `M ≈ U diag(s) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// n_rows × k, orthonormal columns.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// n_cols × k, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U diag(s) Vᵀ` as a dense matrix.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for r in 0..us.n_rows() {
            for (v, s) in us.row_mut(r).iter_mut().zip(&self.singular_values) {
                *v *= s;
            }
        }
        us.matmul(&self.v.transpose()).expect("shapes agree by construction")
    }
}

pub fn truncated_svd(m: &SparseMatrix, k: usize, seed: u64) -> Result<SvdResult> {
    truncated_svd_with(m, k, seed, SvdOptions::default())
}

pub fn truncated_svd_with(
    m: &SparseMatrix,
    k: usize,
    seed: u64,
    opts: SvdOptions,
) -> Result<SvdResult> {
    let min_dim = m.n_rows().min(m.n_cols());
    if k > min_dim {
        return Err(Error::RankTooLarge { k, min_dim });
    }
    if m.raw_parts().2.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("truncated_svd input"));
    }
    if k == 0 {
        return Ok(SvdResult {
            u: DenseMatrix::zeros(m.n_rows(), 0),
            singular_values: Vec::new(),
            v: DenseMatrix::zeros(m.n_cols(), 0),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (k + opts.oversample).min(min_dim);

    let omega = DenseMatrix::from_fn(m.n_cols(), width, |_, _| rng.sample(StandardNormal));
    let mut q = orthonormalize(m.mul_dense(&omega)?, &mut rng);
    for _ in 0..opts.power_iters {
        let z = orthonormalize(m.tmul_dense(&q)?, &mut rng);
        q = orthonormalize(m.mul_dense(&z)?, &mut rng);
    }

    // Bᵀ = Mᵀ Q (n_cols × width); factor Bᵀ = Qb R, then SVD the small R.
    let bt = m.tmul_dense(&q)?;
    let (qb, r) = qr(bt, &mut rng);
    let small = jacobi_svd(&r);

    // Bᵀ = Qb X Σ Wᵀ  =>  B = W Σ (Qb X)ᵀ  =>  M ≈ (Q W) Σ (Qb X)ᵀ
    let x = complete_orthonormal(small.left, &small.values, &mut rng);
    let v_full = qb.matmul(&x)?;
    let u_full = q.matmul(&small.right)?;

    let mut u = u_full.columns(0, k);
    let mut v = v_full.columns(0, k);
    let singular_values = small.values[..k].to_vec();
    canonicalize_signs(&mut u, &mut v);

    Ok(SvdResult {
        u,
        singular_values,
        v,
    })
}

/// Flips each singular pair so the largest-magnitude entry of the V column
/// is positive. Ties go to the lowest index.
pub fn canonicalize_signs(u: &mut DenseMatrix, v: &mut DenseMatrix) {
    for j in 0..v.n_cols() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for r in 0..v.n_rows() {
            let x = v[(r, j)];
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            for r in 0..v.n_rows() {
                v[(r, j)] = -v[(r, j)];
            }
            for r in 0..u.n_rows() {
                u[(r, j)] = -u[(r, j)];
            }
        }
    }
}

/// Column-major scratch: `cols[j]` is column j.
fn to_columns(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.n_cols()).map(|c| m.col(c)).collect()
}

/// Orthonormal basis for the column span, same shape as the input.
/// Columns that collapse numerically are replaced by random directions
/// orthogonal to the rest, so the result always has orthonormal columns.
fn orthonormalize(m: DenseMatrix, rng: &mut impl Rng) -> DenseMatrix {
    qr(m, rng).0
}

/// Thin QR by modified Gram-Schmidt with one reorthogonalization pass.
fn qr(m: DenseMatrix, rng: &mut impl Rng) -> (DenseMatrix, DenseMatrix) {
    let n = m.n_rows();
    let width = m.n_cols();
    let mut cols = to_columns(&m);
    let mut r = DenseMatrix::zeros(width, width);
    let scale = cols.iter().map(|c| norm(c)).fold(0.0, f64::max);

    for j in 0..width {
        let original = norm(&cols[j]);
        for _pass in 0..2 {
            for i in 0..j {
                let proj = dot(&cols[i], &cols[j]);
                r[(i, j)] += proj;
                let (head, tail) = cols.split_at_mut(j);
                for (a, b) in tail[0].iter_mut().zip(&head[i]) {
                    *a -= proj * b;
                }
            }
        }
        let residual = norm(&cols[j]);
        if residual > 1e-12 * original.max(scale) && residual > 0.0 {
            r[(j, j)] = residual;
            cols[j].iter_mut().for_each(|v| *v /= residual);
        } else {
            // Dependent column: its R coefficient is zero, and the basis is
            // completed with a fresh random direction.
            r[(j, j)] = 0.0;
            cols[j] = random_orthogonal(&cols[..j], n, rng);
        }
    }
    (DenseMatrix::from_columns(n, &cols), r)
}

fn random_orthogonal(basis: &[Vec<f64>], n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _pass in 0..2 {
            for b in basis {
                let p = dot(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= p * y;
                }
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return v;
        }
    }
}

struct SmallSvd {
    /// Columns of A·W normalized; columns for zero singular values are zero.
    left: DenseMatrix,
    values: Vec<f64>,
    /// Accumulated rotations W (orthogonal).
    right: DenseMatrix,
}

/// One-sided Jacobi SVD of a small square-or-tall matrix `a = X Σ Wᵀ`.
/// Output is sorted by nonincreasing singular value.
fn jacobi_svd(a: &DenseMatrix) -> SmallSvd {
    let n = a.n_rows();
    let width = a.n_cols();
    let mut cols = to_columns(a);
    let mut w: Vec<Vec<f64>> = (0..width)
        .map(|j| (0..width).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..width {
            for q in p + 1..width {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-14 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut w, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut values: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));

    let top = values.iter().copied().fold(0.0, f64::max);
    let mut left = Vec::with_capacity(width);
    let mut right = Vec::with_capacity(width);
    let mut sorted = Vec::with_capacity(width);
    for &j in &order {
        let s = values[j];
        if s > 1e-13 * top && s > 0.0 {
            left.push(cols[j].iter().map(|v| v / s).collect::<Vec<_>>());
            sorted.push(s);
        } else {
            left.push(vec![0.0; n]);
            sorted.push(0.0);
        }
        right.push(w[j].clone());
    }
    values = sorted;
    SmallSvd {
        left: DenseMatrix::from_columns(n, &left),
        values,
        right: DenseMatrix::from_columns(width, &right),
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Replaces the zero columns (zero singular values) with an orthonormal
/// completion of the nonzero ones.
fn complete_orthonormal(m: DenseMatrix, values: &[f64], rng: &mut impl Rng) -> DenseMatrix {
    let n = m.n_rows();
    let mut cols = to_columns(&m);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for (j, col) in cols.iter().enumerate() {
        if values[j] > 0.0 {
            basis.push(col.clone());
        }
    }
    for (j, col) in cols.iter_mut().enumerate() {
        if values[j] == 0.0 {
            let fresh = random_orthogonal(&basis, n, rng);
            basis.push(fresh.clone());
            *col = fresh;
        }
    }
    DenseMatrix::from_columns(n, &cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sparse(rows: &[Vec<f64>]) -> SparseMatrix {
        SparseMatrix::from_dense(&DenseMatrix::from_rows(rows)).unwrap()
    }

    #[test]
    fn diagonal_singular_values() {
        let m = sparse(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let svd = truncated_svd(&m, 2, 7).unwrap();
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((svd.singular_values[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_full_rank() {
        let m = sparse(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let svd = truncated_svd(&m, 3, 1).unwrap();
        for s in &svd.singular_values {
            assert!((s - 1.0).abs() < 1e-12);
        }
        let recon = svd.reconstruct();
        assert!(recon.max_abs_diff(&m.to_dense()) < 1e-12);
    }

    #[test]
    fn rank_above_min_dim_is_rejected() {
        let m = sparse(&[vec![1.0, 2.0]]);
        assert!(matches!(
            truncated_svd(&m, 2, 0),
            Err(Error::RankTooLarge { k: 2, min_dim: 1 })
        ));
    }

    #[test]
    fn zero_matrix_gives_orthonormal_factors() {
        let m = SparseMatrix::zeros(4, 3);
        let svd = truncated_svd(&m, 2, 3).unwrap();
        assert_eq!(svd.singular_values, vec![0.0, 0.0]);
        let vtv = svd.v.tmatmul(&svd.v).unwrap();
        assert!(vtv.max_abs_diff(&DenseMatrix::identity(2)) < 1e-10);
    }

    #[test]
    fn sign_canonical_and_seed_deterministic() {
        let m = sparse(&[vec![1.0, -2.0, 0.5], vec![-3.0, 1.0, 2.0], vec![0.0, 4.0, -1.0]]);
        let a = truncated_svd(&m, 2, 11).unwrap();
        let b = truncated_svd(&m, 2, 11).unwrap();
        assert_eq!(a.v, b.v);
        for j in 0..2 {
            let col = a.v.col(j);
            let max = col.iter().copied().fold(0.0f64, |acc, x| {
                if x.abs() > acc.abs() {
                    x
                } else {
                    acc
                }
            });
            assert!(max > 0.0);
        }
    }
}
