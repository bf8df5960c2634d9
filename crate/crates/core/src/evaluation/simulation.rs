//! Offline questionnaire simulation: hold out part of each test user's
//! history, answer the questions from the remaining edits, and measure how
//! much of the held-out set the recommendations recover.

use std::collections::HashSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quantile_sorted;
use crate::error::{Error, Result};
use crate::numerics::{dot, SparseMatrix};
use crate::recommender::{interest_from_weights, top_k, CfModel, RecMethod};
use crate::topics::TopicMatrix;

pub const DEFAULT_HOLDOUT: usize = 20;
pub const DEFAULT_EVAL_K: usize = 300;
pub const PERCENTILE_LEVELS: [f64; 6] = [50.0, 75.0, 90.0, 95.0, 99.0, 99.9];

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutUser {
    pub user: usize,
    /// Remaining `(article, edits)` after the holdout is zeroed.
    pub modified: Vec<(usize, f64)>,
    /// Sorted held-out article indices.
    pub holdout: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct HoldoutSet {
    pub users: Vec<HoldoutUser>,
    /// Candidates with too few distinct articles.
    pub excluded: usize,
    /// The edit matrix with every held-out cell removed.
    pub train: SparseMatrix,
}

/// Zeroes `holdout_size` uniformly chosen nonzero entries for each candidate
/// with more than `holdout_size` distinct articles.
pub fn holdout_users(
    edits: &SparseMatrix,
    candidates: &[usize],
    holdout_size: usize,
    seed: u64,
) -> Result<HoldoutSet> {
    if holdout_size == 0 {
        return Err(Error::InvalidArgument("holdout size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut users = Vec::new();
    let mut excluded = 0;
    let mut removed = HashSet::new();
    for u in sorted {
        if u >= edits.n_rows() {
            return Err(Error::Dimension(format!("user {u} outside the edit matrix")));
        }
        let nnz = edits.row_nnz(u);
        if nnz <= holdout_size {
            excluded += 1;
            continue;
        }
        let picked: HashSet<usize> = index::sample(&mut rng, nnz, holdout_size).into_iter().collect();
        let mut modified = Vec::with_capacity(nnz - holdout_size);
        let mut holdout = Vec::with_capacity(holdout_size);
        for (pos, (a, e)) in edits.row(u).enumerate() {
            if picked.contains(&pos) {
                holdout.push(a);
                removed.insert((u, a));
            } else {
                modified.push((a, e));
            }
        }
        users.push(HoldoutUser {
            user: u,
            modified,
            holdout,
        });
    }
    let train = SparseMatrix::from_triplets(
        edits.n_rows(),
        edits.n_cols(),
        edits.triplets().filter(|&(u, a, _)| !removed.contains(&(u, a))),
    )?;
    Ok(HoldoutSet {
        users,
        excluded,
        train,
    })
}

/// The six thresholds at levels 1/7 … 6/7.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Septiles(pub [f64; 6]);

impl Septiles {
    /// Bin 0..=6; a value equal to a threshold lands in the lower bin.
    pub fn bin(&self, value: f64) -> usize {
        self.0.iter().filter(|&&t| t < value).count()
    }

    /// Likert value of the bin holding `value`, from −1 up to +1.
    pub fn likert(&self, value: f64) -> f64 {
        (self.bin(value) as f64 - 3.0) / 3.0
    }
}

pub fn compute_septiles(values: &[f64]) -> Result<Septiles> {
    if values.len() < 7 {
        return Err(Error::InvalidArgument(format!(
            "septiles need at least 7 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("septile input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut t = [0.0; 6];
    for (j, slot) in t.iter_mut().enumerate() {
        *slot = quantile_sorted(&sorted, (j + 1) as f64 / 7.0);
    }
    Ok(Septiles(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeptileMode {
    /// One set of thresholds over every (user, question) value.
    #[default]
    Global,
    /// Thresholds computed separately for each question.
    PerQuestion,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeptileTable {
    Global(Septiles),
    PerQuestion(Vec<Septiles>),
}

impl SeptileTable {
    /// `dots[u][i]` is user u's raw response to question i.
    pub fn build(dots: &[Vec<f64>], mode: SeptileMode) -> Result<Self> {
        match mode {
            SeptileMode::Global => {
                let pooled: Vec<f64> = dots.iter().flatten().copied().collect();
                Ok(SeptileTable::Global(compute_septiles(&pooled)?))
            }
            SeptileMode::PerQuestion => {
                let k = dots.first().map_or(0, Vec::len);
                (0..k)
                    .map(|i| compute_septiles(&dots.iter().map(|d| d[i]).collect::<Vec<_>>()))
                    .collect::<Result<Vec<_>>>()
                    .map(SeptileTable::PerQuestion)
            }
        }
    }

    pub fn for_question(&self, i: usize) -> &Septiles {
        match self {
            SeptileTable::Global(s) => s,
            SeptileTable::PerQuestion(v) => &v[i],
        }
    }
}

/// `⟨edit vector, T_i⟩` for each topic, from a sparse edit vector.
pub fn response_dots(edit_vector: &[(usize, f64)], topics: &TopicMatrix) -> Vec<f64> {
    let mut dots = vec![0.0; topics.n_topics()];
    for &(a, e) in edit_vector {
        for (d, t) in dots.iter_mut().zip(topics.topics.row(a)) {
            *d += e * t;
        }
    }
    dots
}

/// Septile-binned simulated answers, one per topic.
pub fn simulate_responses(
    edit_vector: &[(usize, f64)],
    topics: &TopicMatrix,
    septiles: &SeptileTable,
) -> Vec<f64> {
    response_dots(edit_vector, topics)
        .into_iter()
        .enumerate()
        .map(|(i, d)| septiles.for_question(i).likert(d))
        .collect()
}

fn hits(recs: &[usize], holdout: &HashSet<usize>, k: usize) -> usize {
    recs.iter().take(k).filter(|a| holdout.contains(a)).count()
}

/// Fraction of the holdout found among the first `k` recommendations.
pub fn recall_at_k(recs: &[usize], holdout: &HashSet<usize>, k: usize) -> f64 {
    if holdout.is_empty() {
        return 0.0;
    }
    hits(recs, holdout, k) as f64 / holdout.len() as f64
}

/// Fraction of the first `k` recommendations that are held out.
pub fn precision_at_k(recs: &[usize], holdout: &HashSet<usize>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    hits(recs, holdout, k) as f64 / k as f64
}

/// Recommender under evaluation.
#[derive(Debug, Clone, Copy)]
pub enum EvalMethod<'a> {
    /// Questionnaire answers simulated from topics; `stratified = false` uses
    /// raw dot products as weights.
    Questionnaire {
        topics: &'a TopicMatrix,
        stratified: bool,
    },
    EditPop,
    ViewPop(&'a [f64]),
    /// Trained on the holdout set's train matrix.
    Cf(&'a CfModel),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub septile_mode: SeptileMode,
    /// Drop the user's remaining edited articles from their list.
    pub exclude_seen: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: DEFAULT_EVAL_K,
            septile_mode: SeptileMode::Global,
            exclude_seen: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallSummary {
    pub mean: f64,
    /// `(level, value)` at each of the reported percentile levels.
    pub percentiles: Vec<(f64, f64)>,
}

pub fn summarize(values: &[f64]) -> Result<RecallSummary> {
    if values.is_empty() {
        return Err(Error::NoEligibleUsers);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(RecallSummary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        percentiles: PERCENTILE_LEVELS
            .iter()
            .map(|&p| (p, quantile_sorted(&sorted, p / 100.0)))
            .collect(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationResult {
    pub method: String,
    pub k: usize,
    pub users: Vec<usize>,
    pub recalls: Vec<f64>,
    pub summary: RecallSummary,
}

pub fn run_offline_eval(
    method_name: &str,
    method: EvalMethod<'_>,
    holdouts: &HoldoutSet,
    config: &EvalConfig,
) -> Result<SimulationResult> {
    if holdouts.users.is_empty() {
        return Err(Error::NoEligibleUsers);
    }
    let n_articles = holdouts.train.n_cols();

    let septiles = match method {
        EvalMethod::Questionnaire {
            topics,
            stratified: true,
        } => {
            let dots: Vec<Vec<f64>> = holdouts
                .users
                .par_iter()
                .map(|h| response_dots(&h.modified, topics))
                .collect();
            Some(SeptileTable::build(&dots, config.septile_mode)?)
        }
        _ => None,
    };
    let popularity = match method {
        EvalMethod::EditPop => Some(holdouts.train.col_sums()),
        EvalMethod::ViewPop(views) => {
            if views.len() != n_articles {
                return Err(Error::Dimension(format!(
                    "{} view counts for {n_articles} articles",
                    views.len()
                )));
            }
            Some(views.to_vec())
        }
        _ => None,
    };

    let recalls: Vec<f64> = holdouts
        .users
        .par_iter()
        .map(|h| -> Result<f64> {
            let scores = match method {
                EvalMethod::Questionnaire { topics, stratified } => {
                    let weights = match &septiles {
                        Some(table) if stratified => simulate_responses(&h.modified, topics, table),
                        _ => response_dots(&h.modified, topics),
                    };
                    interest_from_weights(&weights, topics)?.scores
                }
                EvalMethod::EditPop | EvalMethod::ViewPop(_) => {
                    popularity.clone().expect("popularity computed above")
                }
                EvalMethod::Cf(model) => {
                    if h.user >= model.user_factors.n_rows() {
                        return Err(Error::ColdUser);
                    }
                    let x = model.user_factors.row(h.user);
                    model.item_factors.rows().map(|y| dot(x, y)).collect()
                }
            };
            let exclusions: HashSet<usize> = if config.exclude_seen {
                h.modified.iter().map(|&(a, _)| a).collect()
            } else {
                HashSet::new()
            };
            let list = top_k(&scores, config.k, &exclusions, RecMethod::QBased)?;
            let recs = list.articles();
            let holdout: HashSet<usize> = h.holdout.iter().copied().collect();
            let recall = recall_at_k(&recs, &holdout, config.k);
            let precision = precision_at_k(&recs, &holdout, config.k);
            let implied = recall * holdout.len() as f64 / config.k as f64;
            assert!(
                (precision - implied).abs() <= 1e-12,
                "precision {precision} vs recall-implied {implied} for user {}",
                h.user
            );
            Ok(recall)
        })
        .collect::<Result<_>>()?;

    Ok(SimulationResult {
        method: method_name.to_string(),
        k: config.k,
        users: holdouts.users.iter().map(|h| h.user).collect(),
        summary: summarize(&recalls)?,
        recalls,
    })
}
