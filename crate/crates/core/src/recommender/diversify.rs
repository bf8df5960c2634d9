use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RecommendationList;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    /// Cluster of each input point.
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Lloyd's algorithm with k-means++ seeding. Clusters that lose all their
/// points stay empty.
pub fn kmeans(points: &[&[f64]], k: usize, max_iter: usize, rng: &mut impl Rng) -> KMeans {
    if points.is_empty() || k == 0 {
        return KMeans {
            centroids: Vec::new(),
            assignments: vec![0; points.len()],
            iterations: 0,
        };
    }
    let dim = points[0].len();
    let mut centroids: Vec<Vec<f64>> = vec![points[rng.random_range(0..points.len())].to_vec()];
    while centroids.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| centroids.iter().map(|c| sq_dist(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[pick].to_vec());
    }

    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p.iter()) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    KMeans {
        centroids,
        assignments,
        iterations,
    }
}

/// Clusters the pool on the article latents into `n_out` groups and draws
/// one article per nonempty cluster; empty clusters are backfilled with the
/// best-scored unused pool articles. Output keeps pool order.
pub fn diversify(
    pool: &RecommendationList,
    latents: &DenseMatrix,
    n_out: usize,
    seed: u64,
) -> Result<RecommendationList> {
    if pool.len() < n_out {
        return Err(Error::InsufficientArticles {
            needed: n_out,
            available: pool.len(),
        });
    }
    if let Some(r) = pool.items.iter().find(|r| r.article >= latents.n_rows()) {
        return Err(Error::Dimension(format!(
            "no latent row for article {}",
            r.article
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<&[f64]> = pool.items.iter().map(|r| latents.row(r.article)).collect();
    let clusters = kmeans(&points, n_out, 100, &mut rng);

    let mut chosen: HashSet<usize> = HashSet::new();
    for c in 0..n_out {
        let members: Vec<usize> = (0..pool.len())
            .filter(|&i| clusters.assignments[i] == c)
            .collect();
        if let Some(&i) = members.choose(&mut rng) {
            chosen.insert(i);
        }
    }
    for i in 0..pool.len() {
        if chosen.len() >= n_out {
            break;
        }
        chosen.insert(i);
    }
    // pool is score-ordered, so positions double as the backfill priority
    let mut positions: Vec<usize> = chosen.into_iter().collect();
    positions.sort_unstable();
    Ok(RecommendationList {
        method: pool.method,
        items: positions.into_iter().map(|i| pool.items[i]).collect(),
    })
}
