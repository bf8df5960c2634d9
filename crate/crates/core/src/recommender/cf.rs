//! Weighted alternating least squares on the implicit-feedback objective
//! `Σ c_ui (r_ui − x_uᵀ y_i)² + reg (‖X‖² + ‖Y‖²)`, the same rating and
//! confidence transforms as the joint model with no anchor or orthogonality
//! term.

use std::collections::HashSet;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{top_k, RecMethod, RecommendationList};
use crate::error::{Error, Result};
use crate::numerics::{cholesky_solve, dot, DenseMatrix, SparseMatrix};
use crate::topics::confidence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfParams {
    pub dims: usize,
    pub regularization: f64,
    pub iterations: usize,
    pub kappa: f64,
    pub epsilon: f64,
}

impl Default for CfParams {
    fn default() -> Self {
        CfParams {
            dims: 50,
            regularization: 0.1,
            iterations: 15,
            kappa: 10.0,
            epsilon: 20.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CfModel {
    /// n_users × dims
    pub user_factors: DenseMatrix,
    /// n_articles × dims
    pub item_factors: DenseMatrix,
    pub params: CfParams,
    /// Objective after each full alternation.
    pub objective_log: Vec<f64>,
}

/// Full weighted objective, zero cells included.
pub fn cf_objective(
    edits: &SparseMatrix,
    users: &DenseMatrix,
    items: &DenseMatrix,
    params: &CfParams,
) -> f64 {
    let xtx = users.tmatmul(users).expect("same width");
    let yty = items.tmatmul(items).expect("same width");
    let mut total: f64 = xtx.as_slice().iter().zip(yty.as_slice()).map(|(a, b)| a * b).sum();
    for (u, i, e) in edits.triplets() {
        let pred = dot(users.row(u), items.row(i));
        let c = confidence(e, params.kappa, params.epsilon);
        total += c * (1.0 - pred) * (1.0 - pred) - pred * pred;
    }
    let reg: f64 = users
        .as_slice()
        .iter()
        .chain(items.as_slice())
        .map(|v| v * v)
        .sum();
    total + params.regularization * reg
}

/// Solves every row of `target` against fixed `fixed` factors.
fn solve_side(
    interactions: &SparseMatrix,
    fixed: &DenseMatrix,
    params: &CfParams,
) -> Result<DenseMatrix> {
    let d = params.dims;
    let mut gram = fixed.tmatmul(fixed)?;
    for j in 0..d {
        gram[(j, j)] += params.regularization;
    }
    let rows: Vec<Result<Vec<f64>>> = (0..interactions.n_rows())
        .into_par_iter()
        .map(|r| {
            if interactions.row_nnz(r) == 0 {
                return Ok(vec![0.0; d]);
            }
            let mut a = gram.clone();
            let mut b = vec![0.0; d];
            for (c, e) in interactions.row(r) {
                let conf = confidence(e, params.kappa, params.epsilon);
                let y = fixed.row(c);
                for j in 0..d {
                    b[j] += conf * y[j];
                    let scaled = (conf - 1.0) * y[j];
                    for l in 0..d {
                        a[(j, l)] += scaled * y[l];
                    }
                }
            }
            cholesky_solve(&a, &b)
        })
        .collect();
    let mut out = DenseMatrix::zeros(interactions.n_rows(), d);
    for (r, row) in rows.into_iter().enumerate() {
        out.row_mut(r).copy_from_slice(&row?);
    }
    Ok(out)
}

pub fn train_cf(edits: &SparseMatrix, params: &CfParams, seed: u64) -> Result<CfModel> {
    if params.dims == 0 || !(params.regularization > 0.0) {
        return Err(Error::InvalidArgument(
            "CF needs positive dims and regularization".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.01).expect("valid std");
    let mut users = DenseMatrix::from_fn(edits.n_rows(), params.dims, |_, _| normal.sample(&mut rng));
    let mut items = DenseMatrix::from_fn(edits.n_cols(), params.dims, |_, _| normal.sample(&mut rng));
    let by_item = edits.transpose();

    let mut objective_log = Vec::with_capacity(params.iterations);
    for it in 0..params.iterations {
        users = solve_side(edits, &items, params)?;
        items = solve_side(&by_item, &users, params)?;
        let obj = cf_objective(edits, &users, &items, params);
        debug!("als iteration {}: objective {obj:.6e}", it + 1);
        objective_log.push(obj);
    }
    Ok(CfModel {
        user_factors: users,
        item_factors: items,
        params: params.clone(),
        objective_log,
    })
}

/// Ranks articles for a user with history by `x_uᵀ y_i`, skipping articles
/// the user already edited.
pub fn cf_recommend(
    model: &CfModel,
    edits: &SparseMatrix,
    user: usize,
    k: usize,
) -> Result<RecommendationList> {
    if user >= model.user_factors.n_rows() || user >= edits.n_rows() || edits.row_nnz(user) == 0 {
        return Err(Error::ColdUser);
    }
    let x = model.user_factors.row(user);
    let scores: Vec<f64> = model.item_factors.rows().map(|y| dot(x, y)).collect();
    let seen: HashSet<usize> = edits.row_indices(user).iter().copied().collect();
    top_k(&scores, k, &seen, RecMethod::CfBased)
}
