//! Synthetic corpora with planted topic clusters, for end-to-end checks.
//!
//! Article `a` belongs to cluster `a % n_clusters`, user `u` to
//! `u % n_clusters`. Each cluster owns a contiguous block of the vocabulary.
//! Term noise draws a share of each article's tokens from the vocabulary of
//! its partner cluster `(g + n_clusters / 2) % n_clusters`, so text alone
//! blurs the two while the edit log keeps them apart. Label noise sends a
//! share of each user's edits to uniformly random articles.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ArticleRecord, EditTriple};
use crate::error::{Error, Result};
use crate::numerics::SparseMatrix;
use crate::Corpus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_clusters: usize,
    pub n_users: usize,
    pub n_articles: usize,
    pub n_terms: usize,
    /// Share of each user's edited articles drawn uniformly at random.
    pub label_noise: f64,
    /// Share of each article's tokens drawn from its partner cluster.
    pub term_noise: f64,
    pub tokens_per_article: usize,
    /// Inclusive range of distinct articles per user.
    pub articles_per_user: (usize, usize),
    /// Largest edit count on a single (user, article) cell.
    pub max_edits: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_clusters: 8,
            n_users: 400,
            n_articles: 400,
            n_terms: 600,
            label_noise: 0.1,
            term_noise: 0.3,
            tokens_per_article: 150,
            articles_per_user: (25, 40),
            max_edits: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: Corpus,
    pub article_cluster: Vec<usize>,
    pub user_cluster: Vec<usize>,
    /// Views per article, higher for clusters' central articles.
    pub views: Vec<f64>,
    pub config: SynthConfig,
}

impl PlantedCorpus {
    /// The partner cluster whose vocabulary leaks into `g`.
    pub fn partner(&self, g: usize) -> usize {
        (g + self.config.n_clusters / 2) % self.config.n_clusters
    }

    /// Raw records, as an ingest step would produce them.
    pub fn to_records(&self) -> (Vec<ArticleRecord>, Vec<EditTriple>) {
        let c = &self.corpus;
        let by_article = c.term_counts.transpose();
        let articles = (0..c.n_articles())
            .map(|a| {
                let mut words = Vec::new();
                for (t, n) in by_article.row(a) {
                    for _ in 0..n as usize {
                        words.push(c.vocabulary[t].as_str());
                    }
                }
                ArticleRecord::new(c.article_ids[a].clone(), c.titles[a].clone(), &words.join(" "))
            })
            .collect();
        let edits = c
            .edits
            .triplets()
            .map(|(u, a, e)| EditTriple::new(c.user_ids[u].clone(), c.article_ids[a].clone(), e as u64))
            .collect();
        (articles, edits)
    }
}

fn check(config: &SynthConfig) -> Result<()> {
    let (lo, hi) = config.articles_per_user;
    if config.n_clusters < 2
        || config.n_terms < config.n_clusters
        || config.n_articles < config.n_clusters
        || lo == 0
        || lo > hi
        || hi > config.n_articles
        || config.max_edits == 0
    {
        return Err(Error::InvalidArgument(format!("inconsistent synthetic config {config:?}")));
    }
    for f in [config.label_noise, config.term_noise] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!("noise share {f} outside [0, 1]")));
        }
    }
    Ok(())
}

pub fn generate(config: &SynthConfig, seed: u64) -> Result<PlantedCorpus> {
    check(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = config.n_clusters;
    let article_cluster: Vec<usize> = (0..config.n_articles).map(|a| a % k).collect();
    let user_cluster: Vec<usize> = (0..config.n_users).map(|u| u % k).collect();
    let members: Vec<Vec<usize>> = (0..k)
        .map(|g| (0..config.n_articles).filter(|&a| article_cluster[a] == g).collect())
        .collect();
    let term_block = config.n_terms / k;
    let term_range = |g: usize| {
        let start = g * term_block;
        let end = if g + 1 == k { config.n_terms } else { start + term_block };
        start..end
    };

    let mut term_counts = Vec::new();
    for a in 0..config.n_articles {
        let g = article_cluster[a];
        let partner = (g + k / 2) % k;
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for _ in 0..config.tokens_per_article {
            let source = if rng.random_bool(config.term_noise) { partner } else { g };
            // squaring skews draws toward the head of the block
            let r = term_range(source);
            let u: f64 = rng.random();
            let t = r.start + ((u * u) * r.len() as f64) as usize;
            *counts.entry(t.min(r.end - 1)).or_default() += 1.0;
        }
        term_counts.extend(counts.into_iter().map(|(t, n)| (t, a, n)));
    }

    let mut edits: Vec<(usize, usize, f64)> = Vec::new();
    for u in 0..config.n_users {
        let g = user_cluster[u];
        let n = rng.random_range(config.articles_per_user.0..=config.articles_per_user.1);
        let mut chosen: BTreeMap<usize, f64> = BTreeMap::new();
        let n_noise = (0..n).filter(|_| rng.random_bool(config.label_noise)).count();
        let n_home = (n - n_noise).min(members[g].len());
        for i in index::sample(&mut rng, members[g].len(), n_home) {
            chosen.insert(members[g][i], 0.0);
        }
        while chosen.len() < n_home + n_noise {
            chosen.insert(rng.random_range(0..config.n_articles), 0.0);
        }
        for (a, count) in chosen.iter_mut() {
            // heavier editing on the first articles of a cluster
            let rank = a / k;
            let bonus = if rank < 5 { 3 } else { 0 };
            *count = (rng.random_range(1..=config.max_edits) + bonus).min(config.max_edits + 3) as f64;
        }
        edits.extend(chosen.into_iter().map(|(a, e)| (u, a, e)));
    }

    let edits = SparseMatrix::from_triplets(config.n_users, config.n_articles, edits)?;
    let term_counts = SparseMatrix::from_triplets(config.n_terms, config.n_articles, term_counts)?;
    let views: Vec<f64> = edits
        .col_sums()
        .iter()
        .map(|&s| (s * 10.0 + rng.random_range(0.0..50.0)).round())
        .collect();
    let corpus = Corpus {
        article_ids: (0..config.n_articles).map(|a| format!("A{a:05}")).collect(),
        titles: (0..config.n_articles)
            .map(|a| format!("Topic {} article {}", article_cluster[a], a / k))
            .collect(),
        user_ids: (0..config.n_users).map(|u| format!("U{u:05}")).collect(),
        vocabulary: (0..config.n_terms)
            .map(|t| format!("c{}w{}", t / term_block.max(1), t))
            .collect(),
        edits,
        term_counts,
    };
    Ok(PlantedCorpus {
        corpus,
        article_cluster,
        user_cluster,
        views,
        config: config.clone(),
    })
}
