use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{ArticleRecord, EditTriple};
use crate::error::{Error, Result};
use crate::numerics::SparseMatrix;

pub(crate) const DEFAULT_LIST_PREFIXES: &[&str] =
    &["List of", "Index of", "Timeline of", "Glossary of"];

/// Preprocessing thresholds. Defaults are the production values; tests and
/// desk-scale runs override them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Terms must appear in at least this many articles.
    pub min_df: usize,
    /// Terms appearing in more than this fraction of articles are dropped.
    pub max_df_fraction: f64,
    /// Minimum total edit count for a user to be kept.
    pub min_user_edits: u64,
    /// Minimum total edit count for an article to be kept.
    pub min_article_edits: u64,
    pub min_tokens: usize,
    pub drop_list_like: bool,
    pub list_prefixes: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_df: 50,
            max_df_fraction: 0.10,
            min_user_edits: 20,
            min_article_edits: 20,
            min_tokens: 100,
            drop_list_like: true,
            list_prefixes: DEFAULT_LIST_PREFIXES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl FilterConfig {
    /// Thresholds that remove nothing.
    pub fn passthrough() -> Self {
        FilterConfig {
            min_df: 0,
            max_df_fraction: 1.0,
            min_user_edits: 0,
            min_article_edits: 0,
            min_tokens: 0,
            drop_list_like: false,
            list_prefixes: Vec::new(),
        }
    }
}

/// Title-prefix rule for lists and list-like articles.
pub fn is_list_like<S: AsRef<str>>(title: &str, prefixes: &[S]) -> bool {
    let title = title.trim_start().to_lowercase();
    prefixes
        .iter()
        .any(|p| title.starts_with(&p.as_ref().to_lowercase()))
}

/// Output of [`filter_corpus`]: id-sorted articles and users with aligned
/// matrices.
#[derive(Debug, Clone)]
pub struct FilteredCorpus {
    pub articles: Vec<ArticleRecord>,
    pub users: Vec<String>,
    pub article_index: HashMap<String, usize>,
    pub user_index: HashMap<String, usize>,
    pub vocabulary: Vec<String>,
    /// users × articles raw edit counts.
    pub edits: SparseMatrix,
    /// vocabulary × articles raw term counts.
    pub term_counts: SparseMatrix,
}

impl FilteredCorpus {
    pub fn n_articles(&self) -> usize {
        self.articles.len()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Retained edits re-keyed back to string ids.
    pub fn edit_triples(&self) -> Vec<EditTriple> {
        self.edits
            .triplets()
            .map(|(u, a, n)| {
                EditTriple::new(
                    self.users[u].clone(),
                    self.articles[a].article_id.clone(),
                    n as u64,
                )
            })
            .collect()
    }

    pub fn into_corpus(self) -> crate::Corpus {
        crate::Corpus {
            article_ids: self.articles.iter().map(|a| a.article_id.clone()).collect(),
            titles: self.articles.into_iter().map(|a| a.title).collect(),
            user_ids: self.users,
            vocabulary: self.vocabulary,
            edits: self.edits,
            term_counts: self.term_counts,
        }
    }
}

/// Applies the stub, list, edit-count and document-frequency filters.
///
/// User and article edit-count filters are iterated to a fixpoint, since
/// dropping an article can push a user under the threshold and vice versa.
/// Document frequencies are computed on the articles that survive.
pub fn filter_corpus(
    articles: &[ArticleRecord],
    edits: &[EditTriple],
    config: &FilterConfig,
) -> Result<FilteredCorpus> {
    let mut alive_articles: BTreeSet<&str> = articles
        .iter()
        .filter(|a| a.token_count >= config.min_tokens)
        .filter(|a| !(config.drop_list_like && is_list_like(&a.title, &config.list_prefixes)))
        .map(|a| a.article_id.as_str())
        .collect();

    let mut live: Vec<&EditTriple> = edits
        .iter()
        .filter(|e| alive_articles.contains(e.article_id.as_str()))
        .collect();
    let mut alive_users: BTreeSet<&str>;

    loop {
        let mut user_totals: HashMap<&str, u64> = HashMap::new();
        let mut article_totals: HashMap<&str, u64> = HashMap::new();
        for e in &live {
            *user_totals.entry(&e.user_id).or_default() += e.edit_count;
            *article_totals.entry(&e.article_id).or_default() += e.edit_count;
        }
        alive_users = user_totals
            .iter()
            .filter(|&(_, &n)| n >= config.min_user_edits)
            .map(|(&u, _)| u)
            .collect();
        let before = alive_articles.len();
        alive_articles.retain(|a| {
            article_totals.get(a).copied().unwrap_or(0) >= config.min_article_edits
        });
        let n_live = live.len();
        live.retain(|e| {
            alive_users.contains(e.user_id.as_str()) && alive_articles.contains(e.article_id.as_str())
        });
        if live.len() == n_live && alive_articles.len() == before {
            break;
        }
    }

    if alive_articles.is_empty() || alive_users.is_empty() {
        return Err(Error::CorpusTooSparse(format!(
            "{} articles and {} users remain",
            alive_articles.len(),
            alive_users.len()
        )));
    }

    let by_id: HashMap<&str, &ArticleRecord> =
        articles.iter().map(|a| (a.article_id.as_str(), a)).collect();
    let kept: Vec<ArticleRecord> = alive_articles
        .iter()
        .map(|id| by_id[id].clone())
        .collect();
    let users: Vec<String> = alive_users.iter().map(|u| u.to_string()).collect();

    let article_index: HashMap<String, usize> = kept
        .iter()
        .enumerate()
        .map(|(i, a)| (a.article_id.clone(), i))
        .collect();
    let user_index: HashMap<String, usize> =
        users.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &kept {
        let distinct: HashSet<&str> = a.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let max_df = config.max_df_fraction * kept.len() as f64;
    let vocabulary: Vec<String> = df
        .into_iter()
        .filter(|&(_, n)| n >= config.min_df && n as f64 <= max_df)
        .map(|(t, _)| t.to_string())
        .collect();
    let term_index: HashMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let term_triplets = kept.iter().enumerate().flat_map(|(a, rec)| {
        rec.tokens
            .iter()
            .filter_map(|t| term_index.get(t.as_str()).map(|&ti| (ti, a, 1.0)))
            .collect::<Vec<_>>()
    });
    let term_counts = SparseMatrix::from_triplets(vocabulary.len(), kept.len(), term_triplets)?;

    let edit_triplets = live.iter().map(|e| {
        (
            user_index[&e.user_id],
            article_index[&e.article_id],
            e.edit_count as f64,
        )
    });
    let edits = SparseMatrix::from_triplets(users.len(), kept.len(), edit_triplets)?;

    Ok(FilteredCorpus {
        articles: kept,
        users,
        article_index,
        user_index,
        vocabulary,
        edits,
        term_counts,
    })
}
