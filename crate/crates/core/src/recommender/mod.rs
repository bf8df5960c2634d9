//! Interest vectors from questionnaire answers, top-k and diversified
//! recommendation lists, popularity baselines and the weighted-ALS ceiling.

mod cf;
mod diversify;

pub use cf::{cf_objective, cf_recommend, train_cf, CfModel, CfParams};
pub use diversify::{diversify, kmeans, KMeans};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SparseMatrix;
use crate::questionnaire::LikertResponse;
use crate::topics::TopicMatrix;

/// Pool size drawn before diversifying questionnaire-based lists.
pub const DEFAULT_POOL: usize = 50;
/// Pool size drawn from the most popular articles before diversifying.
pub const DEFAULT_POPULAR_POOL: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecMethod {
    QBased,
    EditPop,
    ViewPop,
    CfBased,
}

impl fmt::Display for RecMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecMethod::QBased => "q-based",
            RecMethod::EditPop => "edit-pop",
            RecMethod::ViewPop => "view-pop",
            RecMethod::CfBased => "cf-based",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub article: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub method: RecMethod,
    pub items: Vec<Recommendation>,
}

impl RecommendationList {
    pub fn articles(&self) -> Vec<usize> {
        self.items.iter().map(|r| r.article).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Weighted sum of topic vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestVector {
    pub scores: Vec<f64>,
    /// Per-question weights the scores were built from.
    pub weights: Vec<f64>,
}

impl InterestVector {
    /// False when every weight is zero; callers fall back to a popularity list.
    pub fn has_signal(&self) -> bool {
        self.weights.iter().any(|&w| w != 0.0)
    }
}

pub fn interest_vector(responses: &[LikertResponse], topics: &TopicMatrix) -> Result<InterestVector> {
    let weights: Vec<f64> = responses.iter().map(|r| r.score()).collect();
    interest_from_weights(&weights, topics)
}

/// `Σ_i weights[i] · topics[:, i]`.
pub fn interest_from_weights(weights: &[f64], topics: &TopicMatrix) -> Result<InterestVector> {
    if weights.len() != topics.n_topics() {
        return Err(Error::Dimension(format!(
            "{} responses for {} topics",
            weights.len(),
            topics.n_topics()
        )));
    }
    let scores: Vec<f64> = topics
        .topics
        .rows()
        .map(|row| row.iter().zip(weights).map(|(t, w)| w * t).sum())
        .collect();
    if scores.iter().any(|s: &f64| !s.is_finite()) {
        return Err(Error::NonFinite("interest vector"));
    }
    Ok(InterestVector {
        scores,
        weights: weights.to_vec(),
    })
}

/// The `k` best-scoring articles outside `exclusions`, ties by index.
pub fn top_k(
    scores: &[f64],
    k: usize,
    exclusions: &HashSet<usize>,
    method: RecMethod,
) -> Result<RecommendationList> {
    let mut candidates: Vec<usize> = (0..scores.len()).filter(|a| !exclusions.contains(a)).collect();
    if k > candidates.len() {
        return Err(Error::InsufficientArticles {
            needed: k,
            available: candidates.len(),
        });
    }
    let order = |&a: &usize, &b: &usize| scores[b].total_cmp(&scores[a]).then(a.cmp(&b));
    if k > 0 && k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, order);
    }
    candidates.truncate(k);
    candidates.sort_unstable_by(order);
    Ok(RecommendationList {
        method,
        items: candidates
            .into_iter()
            .map(|article| Recommendation {
                article,
                score: scores[article],
            })
            .collect(),
    })
}

/// Most-edited articles by total edit count.
pub fn edit_pop(edits: &SparseMatrix, k: usize) -> Result<RecommendationList> {
    top_k(&edits.col_sums(), k, &HashSet::new(), RecMethod::EditPop)
}

/// Most-viewed articles.
pub fn view_pop(view_counts: &[f64], k: usize) -> Result<RecommendationList> {
    top_k(view_counts, k, &HashSet::new(), RecMethod::ViewPop)
}

/// Reads `article_id \t total_views` lines. Articles absent from the file
/// get zero views; ids not in the index are ignored.
pub fn load_view_counts(path: &Path, article_index: &HashMap<&str, usize>) -> Result<Vec<f64>> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut views = vec![0.0; article_index.len()];
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, count) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(path, format!("line {}: expected two fields", i + 1)))?;
        let count: f64 = count
            .trim()
            .parse()
            .ok()
            .filter(|c: &f64| c.is_finite() && *c >= 0.0)
            .ok_or_else(|| Error::format(path, format!("line {}: bad view count", i + 1)))?;
        if let Some(&a) = article_index.get(id) {
            views[a] += count;
        }
    }
    Ok(views)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;
    use crate::topics::TopicMethod;

    #[test]
    fn basis_topics_give_response_scores() {
        let topics = TopicMatrix::new(DenseMatrix::identity(2), TopicMethod::Joint);
        let iv = interest_vector(&[LikertResponse::AGreat, LikertResponse::BSlight], &topics).unwrap();
        assert_eq!(iv.scores, vec![1.0, -1.0 / 3.0]);
        assert!(iv.has_signal());
    }

    #[test]
    fn all_none_has_no_signal() {
        let topics = TopicMatrix::new(DenseMatrix::identity(3), TopicMethod::Joint);
        let iv = interest_vector(&[LikertResponse::NoPreference; 3], &topics).unwrap();
        assert!(!iv.has_signal());
        assert!(iv.scores.iter().all(|&s| s == 0.0));
        assert!(interest_vector(&[LikertResponse::AGreat], &topics).is_err());
    }

    #[test]
    fn top_k_examples() {
        let s = [0.5, 0.9, 0.1];
        let none = HashSet::new();
        assert_eq!(top_k(&s, 2, &none, RecMethod::QBased).unwrap().articles(), vec![1, 0]);
        let ex: HashSet<usize> = [1].into();
        assert_eq!(top_k(&s, 2, &ex, RecMethod::QBased).unwrap().articles(), vec![0, 2]);
        assert!(top_k(&s, 0, &none, RecMethod::QBased).unwrap().is_empty());
        assert!(matches!(
            top_k(&s, 3, &ex, RecMethod::QBased),
            Err(Error::InsufficientArticles { needed: 3, available: 2 })
        ));
    }

    #[test]
    fn popularity_baselines() {
        let e = SparseMatrix::from_triplets(2, 3, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 1, 9.0), (1, 2, 1.0)])
            .unwrap();
        assert_eq!(edit_pop(&e, 2).unwrap().articles(), vec![1, 0]);
        assert_eq!(view_pop(&[4.0, 4.0, 4.0], 2).unwrap().articles(), vec![0, 1]);
        assert_eq!(view_pop(&[7.0], 1).unwrap().articles(), vec![0]);
    }

    #[test]
    fn view_counts_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("views.tsv");
        fs::write(&path, "a2\t10\nzz\t5\na1\t3\n").unwrap();
        let index: HashMap<&str, usize> = [("a1", 0), ("a2", 1), ("a3", 2)].into();
        assert_eq!(load_view_counts(&path, &index).unwrap(), vec![3.0, 10.0, 0.0]);
        assert!(load_view_counts(&dir.path().join("missing.tsv"), &index).is_err());
    }
}
