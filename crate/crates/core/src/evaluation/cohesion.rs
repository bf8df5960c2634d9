use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quantile_sorted;
use crate::error::{Error, Result};
use crate::numerics::{dot, norm, DenseMatrix};
use crate::ranking::{bottom_n, top_n};

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// Mean pairwise cosine over `articles`, skipping pairs that involve a
/// zero-norm latent row. `None` when no pair survives.
fn mean_pairwise_cosine(articles: &[usize], latents: &DenseMatrix) -> Option<f64> {
    let norms: Vec<f64> = articles.iter().map(|&a| norm(latents.row(a))).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..articles.len() {
        for j in i + 1..articles.len() {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                debug!(
                    "cohesion: skipping pair ({}, {}) with a zero latent",
                    articles[i], articles[j]
                );
                continue;
            }
            let cos = dot(latents.row(articles[i]), latents.row(articles[j])) / (norms[i] * norms[j]);
            total += cos.clamp(-1.0, 1.0);
            pairs += 1;
        }
    }
    (pairs > 0).then(|| total / pairs as f64)
}

/// Average of the mean pairwise latent cosine among the `n` most positive
/// articles of a topic and the same among its `n` most negative.
pub fn cohesion(topic: &[f64], latents: &DenseMatrix, n: usize) -> Result<f64> {
    if topic.len() != latents.n_rows() {
        return Err(Error::Dimension(format!(
            "topic has {} articles, latents have {} rows",
            topic.len(),
            latents.n_rows()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("cohesion needs at least two articles per side".into()));
    }
    if topic.len() < 2 * n {
        return Err(Error::InsufficientArticles {
            needed: 2 * n,
            available: topic.len(),
        });
    }
    let top = mean_pairwise_cosine(&top_n(topic, n), latents);
    let bottom = mean_pairwise_cosine(&bottom_n(topic, n), latents);
    match (top, bottom) {
        (Some(t), Some(b)) => Ok((t + b) / 2.0),
        _ => Err(Error::RankDeficient(
            "no pair of nonzero latents on one side of the topic".into(),
        )),
    }
}

/// Cohesion of every column of `topic_cols`.
pub fn cohesion_scores(topic_cols: &DenseMatrix, latents: &DenseMatrix, n: usize) -> Result<Vec<f64>> {
    (0..topic_cols.n_cols())
        .into_par_iter()
        .map(|c| cohesion(&topic_cols.col(c), latents, n))
        .collect()
}

pub fn mean_cohesion(topic_cols: &DenseMatrix, latents: &DenseMatrix, n: usize) -> Result<f64> {
    if topic_cols.n_cols() == 0 {
        return Err(Error::InvalidArgument("no topics to score".into()));
    }
    let scores = cohesion_scores(topic_cols, latents, n)?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohesionReport {
    pub scores: Vec<f64>,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Mean and 95% percentile-bootstrap interval.
pub fn cohesion_summary(scores: &[f64], seed: u64) -> Result<CohesionReport> {
    if scores.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 cohesion scores, got {}",
            scores.len()
        )));
    }
    let n = scores.len();
    let mean = scores.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| scores[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    Ok(CohesionReport {
        scores: scores.to_vec(),
        mean,
        ci_low: quantile_sorted(&means, 0.025),
        ci_high: quantile_sorted(&means, 0.975),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_latents_score_one() {
        let latents = DenseMatrix::from_fn(6, 3, |_, c| c as f64 + 1.0);
        let topic = [3.0, 2.0, 1.0, -1.0, -2.0, -3.0];
        assert!((cohesion(&topic, &latents, 3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_top_identical_bottom() {
        let latents = DenseMatrix::from_fn(6, 3, |r, c| {
            if r < 3 {
                (r == c) as u8 as f64
            } else {
                1.0
            }
        });
        let topic = [3.0, 2.0, 1.0, -1.0, -2.0, -3.0];
        assert!((cohesion(&topic, &latents, 3).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_latents_are_skipped() {
        let mut latents = DenseMatrix::from_fn(6, 2, |_, _| 1.0);
        latents.row_mut(0).fill(0.0);
        let topic = [3.0, 2.0, 1.0, -1.0, -2.0, -3.0];
        assert!((cohesion(&topic, &latents, 3).unwrap() - 1.0).abs() < 1e-12);
        latents.row_mut(1).fill(0.0);
        assert!(cohesion(&topic, &latents, 3).is_err());
    }

    #[test]
    fn too_few_articles() {
        let latents = DenseMatrix::zeros(3, 2);
        assert!(cohesion(&[1.0, 0.0, -1.0], &latents, 2).is_err());
    }

    #[test]
    fn constant_scores_zero_width() {
        let r = cohesion_summary(&[0.4; 5], 1).unwrap();
        assert_eq!((r.mean, r.ci_low, r.ci_high), (0.4, 0.4, 0.4));
        assert!(cohesion_summary(&[0.4], 1).is_err());
    }

    #[test]
    fn two_point_scores() {
        // resample means are 0, 0.5, 1 with probabilities 1/4, 1/2, 1/4
        let r = cohesion_summary(&[0.0, 1.0], 3).unwrap();
        assert_eq!(r.mean, 0.5);
        assert_eq!(r.ci_low, 0.0);
        assert_eq!(r.ci_high, 1.0);
    }
}
