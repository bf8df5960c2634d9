//! Joint factorization of the edit matrix with a content anchor and a soft
//! orthogonality penalty on the article latents:
//!
//! ```text
//! Σ c_ui (r_ui − p_uᵀ q_i)² + α‖P‖² + λ‖Q − Q̄‖² + θ‖QᵀQ − diag(QᵀQ)‖²
//! ```
//!
//! with `r_ui = [e_ui > 0]` and `c_ui = 1 + κ ln(1 + e_ui / ε)`.

use log::{debug, warn};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TopicMatrix, TopicMethod, LATENT_DIMS};
use crate::error::{Error, Result};
use crate::numerics::{dot, row_normalize, DenseMatrix, SparseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Weight on ‖P‖².
    pub alpha: f64,
    /// Weight on ‖Q − Q̄‖².
    pub lambda: f64,
    /// Weight on the off-diagonal part of QᵀQ.
    pub theta: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub latent_dims: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Share of each mini-batch drawn from nonzero cells.
    pub nonzero_fraction: f64,
    /// Multiplier on the regularizer gradients in each mini-batch step.
    pub reg_scale: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha: 0.1,
            lambda: 0.1,
            theta: 0.1,
            kappa: 10.0,
            epsilon: 20.0,
            latent_dims: LATENT_DIMS,
            learning_rate: 0.01,
            batch_size: 8192,
            epochs: 50,
            nonzero_fraction: 0.9,
            reg_scale: 1.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            self.alpha,
            self.lambda,
            self.theta,
            self.kappa,
            self.learning_rate,
            self.reg_scale,
        ];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "hyperparameter weights must be finite and nonnegative".into(),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if !(self.nonzero_fraction > 0.0 && self.nonzero_fraction < 1.0) {
            return Err(Error::InvalidArgument("nonzero_fraction must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 || self.latent_dims == 0 {
            return Err(Error::InvalidArgument("batch_size and latent_dims must be positive".into()));
        }
        Ok(())
    }

    fn scaled_regularizers(&self) -> HyperParams {
        HyperParams {
            alpha: self.alpha * self.reg_scale,
            lambda: self.lambda * self.reg_scale,
            theta: self.theta * self.reg_scale,
            ..self.clone()
        }
    }
}

/// Inferred binary rating.
pub fn rating(edits: f64) -> f64 {
    if edits > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Confidence in the inferred rating.
pub fn confidence(edits: f64, kappa: f64, epsilon: f64) -> f64 {
    1.0 + kappa * (1.0 + edits / epsilon).ln()
}

/// One (user, article) cell of the edit matrix with its raw count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub user: usize,
    pub article: usize,
    pub edits: f64,
}

fn check_shapes(p: &DenseMatrix, q: &DenseMatrix, qbar: &DenseMatrix, batch: &[Cell]) -> Result<()> {
    if p.n_cols() != q.n_cols() || q.n_rows() != qbar.n_rows() || q.n_cols() != qbar.n_cols() {
        return Err(Error::Dimension(format!(
            "P {}x{}, Q {}x{}, Q̄ {}x{}",
            p.n_rows(),
            p.n_cols(),
            q.n_rows(),
            q.n_cols(),
            qbar.n_rows(),
            qbar.n_cols()
        )));
    }
    if let Some(c) = batch
        .iter()
        .find(|c| c.user >= p.n_rows() || c.article >= q.n_rows())
    {
        return Err(Error::Dimension(format!(
            "cell ({}, {}) outside {}x{}",
            c.user,
            c.article,
            p.n_rows(),
            q.n_rows()
        )));
    }
    Ok(())
}

/// QᵀQ with its diagonal zeroed.
fn off_diagonal_gram(q: &DenseMatrix) -> DenseMatrix {
    let mut g = q.tmatmul(q).expect("square by construction");
    for i in 0..g.n_rows() {
        g[(i, i)] = 0.0;
    }
    g
}

fn squared_norm(m: &DenseMatrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum()
}

fn regularizers(p: &DenseMatrix, q: &DenseMatrix, qbar: &DenseMatrix, hp: &HyperParams) -> f64 {
    let anchor: f64 = q
        .as_slice()
        .iter()
        .zip(qbar.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    hp.alpha * squared_norm(p) + hp.lambda * anchor + hp.theta * squared_norm(&off_diagonal_gram(q))
}

/// Objective restricted to the cells of `batch`; regularizers use the full
/// matrices.
pub fn joint_loss(
    p: &DenseMatrix,
    q: &DenseMatrix,
    qbar: &DenseMatrix,
    batch: &[Cell],
    hp: &HyperParams,
) -> Result<f64> {
    check_shapes(p, q, qbar, batch)?;
    let data: f64 = batch
        .iter()
        .map(|cell| {
            let residual = rating(cell.edits) - dot(p.row(cell.user), q.row(cell.article));
            confidence(cell.edits, hp.kappa, hp.epsilon) * residual * residual
        })
        .sum();
    let loss = data + regularizers(p, q, qbar, hp);
    if !loss.is_finite() {
        return Err(Error::NonFinite("joint_loss"));
    }
    Ok(loss)
}

/// Analytic gradient of [`joint_loss`] with respect to P and Q.
pub fn joint_gradient(
    p: &DenseMatrix,
    q: &DenseMatrix,
    qbar: &DenseMatrix,
    batch: &[Cell],
    hp: &HyperParams,
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_shapes(p, q, qbar, batch)?;
    let mut dp = p.clone();
    dp.scale(2.0 * hp.alpha);
    let mut dq = q.sub(qbar)?;
    dq.scale(2.0 * hp.lambda);
    if hp.theta != 0.0 {
        let g = off_diagonal_gram(q);
        dq.add_scaled(4.0 * hp.theta, &q.matmul(&g)?)?;
    }

    for cell in batch {
        let pu = p.row(cell.user);
        let qi = q.row(cell.article);
        let residual = rating(cell.edits) - dot(pu, qi);
        let w = -2.0 * confidence(cell.edits, hp.kappa, hp.epsilon) * residual;
        for (d, &x) in dp.row_mut(cell.user).iter_mut().zip(qi) {
            *d += w * x;
        }
        for (d, &x) in dq.row_mut(cell.article).iter_mut().zip(pu) {
            *d += w * x;
        }
    }
    if !dp.is_finite() || !dq.is_finite() {
        return Err(Error::NonFinite("joint_gradient"));
    }
    Ok((dp, dq))
}

/// Objective summed over every cell of `edits`, zero cells included.
///
/// Zero cells contribute `(p_uᵀ q_i)²`, whose total is `tr(PᵀP QᵀQ)`, so the
/// dense sum is never materialized.
pub fn full_objective(
    edits: &SparseMatrix,
    p: &DenseMatrix,
    q: &DenseMatrix,
    qbar: &DenseMatrix,
    hp: &HyperParams,
) -> Result<f64> {
    check_shapes(p, q, qbar, &[])?;
    if edits.n_rows() != p.n_rows() || edits.n_cols() != q.n_rows() {
        return Err(Error::Dimension("edit matrix does not match P/Q".into()));
    }
    let ptp = p.tmatmul(p)?;
    let qtq = q.tmatmul(q)?;
    let mut total: f64 = ptp
        .as_slice()
        .iter()
        .zip(qtq.as_slice())
        .map(|(a, b)| a * b)
        .sum();
    for (u, i, e) in edits.triplets() {
        let pred = dot(p.row(u), q.row(i));
        let c = confidence(e, hp.kappa, hp.epsilon);
        total += c * (1.0 - pred) * (1.0 - pred) - pred * pred;
    }
    total += regularizers(p, q, qbar, hp);
    if !total.is_finite() {
        return Err(Error::NonFinite("full_objective"));
    }
    Ok(total)
}

fn nonzero_quota(batch_size: usize, nonzero_fraction: f64) -> usize {
    // guard against 0.9 * 10 landing a hair above 9
    ((nonzero_fraction * batch_size as f64) - 1e-9).ceil().max(0.0) as usize
}

fn cell_at(edits: &SparseMatrix, position: usize) -> Cell {
    let (indptr, indices, values) = edits.raw_parts();
    let user = indptr.partition_point(|&start| start <= position) - 1;
    Cell {
        user,
        article: indices[position],
        edits: values[position],
    }
}

/// Mini-batch with the configured share of nonzero cells (uniform without
/// replacement, or with replacement when there are too few) and the rest
/// drawn uniformly from zero cells by rejection.
pub fn sample_minibatch(
    edits: &SparseMatrix,
    batch_size: usize,
    nonzero_fraction: f64,
    seed: u64,
) -> Vec<Cell> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_minibatch_with(edits, batch_size, nonzero_fraction, &mut rng)
}

pub fn sample_minibatch_with(
    edits: &SparseMatrix,
    batch_size: usize,
    nonzero_fraction: f64,
    rng: &mut impl Rng,
) -> Vec<Cell> {
    let nnz = edits.nnz();
    let quota = nonzero_quota(batch_size, nonzero_fraction).min(batch_size);
    let mut batch = Vec::with_capacity(batch_size);
    if nnz > 0 {
        if nnz >= quota {
            batch.extend(index::sample(rng, nnz, quota).into_iter().map(|pos| cell_at(edits, pos)));
        } else {
            batch.extend((0..quota).map(|_| cell_at(edits, rng.random_range(0..nnz))));
        }
    }

    let zero_quota = batch_size - quota;
    let total_cells = edits.n_rows() * edits.n_cols();
    if zero_quota > 0 {
        if total_cells == nnz {
            debug!("no zero cells available; batch holds {} cells", batch.len());
        } else {
            let target = batch.len() + zero_quota;
            while batch.len() < target {
                let user = rng.random_range(0..edits.n_rows());
                let article = rng.random_range(0..edits.n_cols());
                if edits.get(user, article) == 0.0 {
                    batch.push(Cell {
                        user,
                        article,
                        edits: 0.0,
                    });
                }
            }
        }
    }
    batch
}

/// Trained joint model. Columns of `q` are the joint topic vectors.
#[derive(Debug, Clone)]
pub struct JointModel {
    pub p: DenseMatrix,
    pub q: DenseMatrix,
    pub qbar: DenseMatrix,
    pub hyperparams: HyperParams,
    /// Full objective before the first epoch.
    pub initial_loss: f64,
    /// Full objective after each epoch.
    pub epoch_losses: Vec<f64>,
}

impl JointModel {
    pub fn topics(&self) -> TopicMatrix {
        TopicMatrix::new(self.q.clone(), TopicMethod::Joint)
    }
}

/// Mini-batch gradient descent from `Q = Q̄` and a random row-normalized P,
/// with learning rate decaying as 1/√epoch.
pub fn train_joint(
    edits: &SparseMatrix,
    qbar: &DenseMatrix,
    hp: &HyperParams,
    seed: u64,
) -> Result<JointModel> {
    hp.validate()?;
    if qbar.n_rows() != edits.n_cols() || qbar.n_cols() != hp.latent_dims {
        return Err(Error::Dimension(format!(
            "Q̄ is {}x{}, expected {}x{}",
            qbar.n_rows(),
            qbar.n_cols(),
            edits.n_cols(),
            hp.latent_dims
        )));
    }
    if edits.nnz() == 0 {
        return Err(Error::RankDeficient("edit matrix has no nonzero cells".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p0 = DenseMatrix::from_fn(edits.n_rows(), hp.latent_dims, |_, _| {
        rng.random_range(-1.0..=1.0)
    });
    let mut p = row_normalize(&p0);
    let mut q = qbar.clone();

    let initial_loss = full_objective(edits, &p, &q, qbar, hp)?;
    let step_hp = hp.scaled_regularizers();
    let quota = nonzero_quota(hp.batch_size, hp.nonzero_fraction).max(1);
    let steps = edits.nnz().div_ceil(quota).max(1);
    let mut epoch_losses = Vec::with_capacity(hp.epochs);

    for epoch in 1..=hp.epochs {
        let lr = hp.learning_rate / (epoch as f64).sqrt();
        for _ in 0..steps {
            let batch = sample_minibatch_with(edits, hp.batch_size, hp.nonzero_fraction, &mut rng);
            let (dp, dq) = joint_gradient(&p, &q, qbar, &batch, &step_hp)?;
            p.add_scaled(-lr, &dp)?;
            q.add_scaled(-lr, &dq)?;
        }
        let loss = full_objective(edits, &p, &q, qbar, hp)
            .map_err(|_| Error::Diverged {
                epoch,
                loss: f64::INFINITY,
                initial: initial_loss,
            })?;
        if loss > 10.0 * initial_loss {
            return Err(Error::Diverged {
                epoch,
                loss,
                initial: initial_loss,
            });
        }
        debug!("epoch {epoch}: loss {loss:.6e}");
        epoch_losses.push(loss);
    }

    if let Some(&last) = epoch_losses.last() {
        if last > initial_loss {
            warn!("joint training ended above its initial loss ({last:.6e} > {initial_loss:.6e})");
        }
        let rises = epoch_losses.windows(2).filter(|w| w[1] > w[0]).count();
        if rises * 2 > epoch_losses.len() {
            warn!("joint training loss rose in {rises} of {} epochs", epoch_losses.len());
        }
    }

    Ok(JointModel {
        p,
        q,
        qbar: qbar.clone(),
        hyperparams: hp.clone(),
        initial_loss,
        epoch_losses,
    })
}
