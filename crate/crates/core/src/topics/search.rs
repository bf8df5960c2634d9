//! Validation split and hyperparameter grid search for the joint model.

use log::warn;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::joint::{confidence, rating, train_joint, Cell, HyperParams};
use crate::error::{Error, Result};
use crate::evaluation::mean_cohesion;
use crate::numerics::{dot, DenseMatrix, SparseMatrix};

#[derive(Debug, Clone)]
pub struct ValidationSplit {
    pub train: SparseMatrix,
    pub heldout: Vec<Cell>,
}

/// Holds out `⌊edit_fraction · nnz(u)⌋` nonzero cells for each of
/// `⌊user_fraction · n_users⌋` users drawn from those with at least two
/// nonzeros.
pub fn validation_split(
    edits: &SparseMatrix,
    user_fraction: f64,
    edit_fraction: f64,
    seed: u64,
) -> Result<ValidationSplit> {
    for f in [user_fraction, edit_fraction] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidArgument(format!("fraction {f} outside (0, 1)")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eligible: Vec<usize> = (0..edits.n_rows()).filter(|&u| edits.row_nnz(u) >= 2).collect();
    let wanted = (user_fraction * edits.n_rows() as f64).floor() as usize;
    let n_users = wanted.min(eligible.len());

    let mut chosen: Vec<usize> = index::sample(&mut rng, eligible.len(), n_users)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    chosen.sort_unstable();

    let mut heldout = Vec::new();
    let mut removed = std::collections::HashSet::new();
    for &u in &chosen {
        let nnz = edits.row_nnz(u);
        let n_hold = (edit_fraction * nnz as f64).floor() as usize;
        let mut picks = index::sample(&mut rng, nnz, n_hold).into_vec();
        picks.sort_unstable();
        for pos in picks {
            let article = edits.row_indices(u)[pos];
            heldout.push(Cell {
                user: u,
                article,
                edits: edits.row_values(u)[pos],
            });
            removed.insert((u, article));
        }
    }
    let train = SparseMatrix::from_triplets(
        edits.n_rows(),
        edits.n_cols(),
        edits
            .triplets()
            .filter(|&(u, a, _)| !removed.contains(&(u, a))),
    )?;
    Ok(ValidationSplit { train, heldout })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearchConfig {
    /// Candidate (α, λ, θ) triples.
    pub grid: Vec<(f64, f64, f64)>,
    /// Everything except α, λ, θ.
    pub base: HyperParams,
    pub user_fraction: f64,
    pub edit_fraction: f64,
    /// Topics scored for cohesion.
    pub cohesion_topics: usize,
    /// List length used by the cohesion score.
    pub cohesion_n: usize,
}

impl GridSearchConfig {
    /// α, λ, θ each over {0.01, 0.1, 1}.
    pub fn default_grid() -> Vec<(f64, f64, f64)> {
        let levels = [0.01, 0.1, 1.0];
        let mut grid = Vec::with_capacity(27);
        for &a in &levels {
            for &l in &levels {
                for &t in &levels {
                    grid.push((a, l, t));
                }
            }
        }
        grid
    }
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        GridSearchConfig {
            grid: Self::default_grid(),
            base: HyperParams::default(),
            user_fraction: 0.1,
            edit_fraction: 0.2,
            cohesion_topics: 20,
            cohesion_n: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridPoint {
    pub hyperparams: HyperParams,
    pub validation_mse: Option<f64>,
    pub mean_cohesion: Option<f64>,
    pub failure: Option<String>,
    pub on_frontier: bool,
    /// min-max normalized mse minus normalized cohesion; lower is better.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearchResult {
    /// In grid order.
    pub points: Vec<GridPoint>,
    /// Successful point indices, best score first.
    pub ranking: Vec<usize>,
    pub pick: usize,
}

impl GridSearchResult {
    pub fn frontier(&self) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| self.points[i].on_frontier)
            .collect()
    }

    pub fn best(&self) -> &GridPoint {
        &self.points[self.pick]
    }
}

/// Confidence-weighted squared error on held-out cells.
pub fn validation_mse(p: &DenseMatrix, q: &DenseMatrix, heldout: &[Cell], hp: &HyperParams) -> f64 {
    let total: f64 = heldout
        .iter()
        .map(|c| {
            let residual = rating(c.edits) - dot(p.row(c.user), q.row(c.article));
            confidence(c.edits, hp.kappa, hp.epsilon) * residual * residual
        })
        .sum();
    total / heldout.len() as f64
}

/// Trains every grid point from scratch on one seeded split and scores it by
/// validation error and mean cohesion of its first topics.
pub fn grid_search(
    edits: &SparseMatrix,
    qbar: &DenseMatrix,
    config: &GridSearchConfig,
    seed: u64,
) -> Result<GridSearchResult> {
    if config.grid.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    let split = validation_split(edits, config.user_fraction, config.edit_fraction, seed)?;
    if split.heldout.is_empty() {
        return Err(Error::InvalidArgument(
            "validation split held out no cells".into(),
        ));
    }

    let mut points: Vec<GridPoint> = config
        .grid
        .par_iter()
        .map(|&(alpha, lambda, theta)| {
            let hp = HyperParams {
                alpha,
                lambda,
                theta,
                ..config.base.clone()
            };
            let outcome = train_joint(&split.train, qbar, &hp, seed).and_then(|model| {
                let mse = validation_mse(&model.p, &model.q, &split.heldout, &hp);
                let k = config.cohesion_topics.min(model.q.n_cols());
                let coh = mean_cohesion(&model.q.columns(0, k), &model.q, config.cohesion_n)?;
                Ok((mse, coh))
            });
            match outcome {
                Ok((mse, coh)) => GridPoint {
                    hyperparams: hp,
                    validation_mse: Some(mse),
                    mean_cohesion: Some(coh),
                    failure: None,
                    on_frontier: false,
                    score: None,
                },
                Err(e) => {
                    warn!("grid point ({alpha}, {lambda}, {theta}) failed: {e}");
                    GridPoint {
                        hyperparams: hp,
                        validation_mse: None,
                        mean_cohesion: None,
                        failure: Some(e.to_string()),
                        on_frontier: false,
                        score: None,
                    }
                }
            }
        })
        .collect();

    let ok: Vec<(usize, f64, f64)> = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| Some((i, p.validation_mse?, p.mean_cohesion?)))
        .collect();
    if ok.is_empty() {
        return Err(Error::InvalidArgument("every grid point failed".into()));
    }

    for &(i, mse, coh) in &ok {
        let dominated = ok.iter().any(|&(j, m2, c2)| {
            j != i && m2 <= mse && c2 >= coh && (m2 < mse || c2 > coh)
        });
        points[i].on_frontier = !dominated;
    }

    let normalize = |values: Vec<f64>| -> Vec<f64> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        values
            .iter()
            .map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    };
    let nm = normalize(ok.iter().map(|t| t.1).collect());
    let nc = normalize(ok.iter().map(|t| t.2).collect());
    for (k, &(i, _, _)) in ok.iter().enumerate() {
        points[i].score = Some(nm[k] - nc[k]);
    }

    let mut ranking: Vec<usize> = ok.iter().map(|t| t.0).collect();
    ranking.sort_by(|&a, &b| {
        points[a]
            .score
            .unwrap()
            .total_cmp(&points[b].score.unwrap())
            .then(a.cmp(&b))
    });
    let pick = ranking[0];
    Ok(GridSearchResult {
        points,
        ranking,
        pick,
    })
}
