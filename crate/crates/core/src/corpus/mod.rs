//! Article and edit-log ingestion plus the preprocessing filters.

mod filter;
mod ingest;
mod store;

pub use filter::{filter_corpus, is_list_like, FilterConfig, FilteredCorpus};
pub use ingest::{
    aggregate_edits, ingest_articles, ingest_edits, parse_articles, parse_edits, tokenize,
    IngestReport, LineError,
};
pub use store::{
    load_corpus, read_index_file, read_titles, save_corpus, write_index_file, write_titles,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub article_id: String,
    pub title: String,
    pub tokens: Vec<String>,
    pub token_count: usize,
    pub is_list_like: bool,
}

impl ArticleRecord {
    /// Tokenizes `text` and flags list-like titles with the default prefixes.
    pub fn new(article_id: impl Into<String>, title: impl Into<String>, text: &str) -> Self {
        let title = title.into();
        let tokens = tokenize(text);
        ArticleRecord {
            article_id: article_id.into(),
            is_list_like: is_list_like(&title, filter::DEFAULT_LIST_PREFIXES),
            token_count: tokens.len(),
            title,
            tokens,
        }
    }
}

/// Aggregated edit count of one user on one article.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditTriple {
    pub user_id: String,
    pub article_id: String,
    pub edit_count: u64,
}

impl EditTriple {
    pub fn new(user_id: impl Into<String>, article_id: impl Into<String>, edit_count: u64) -> Self {
        EditTriple {
            user_id: user_id.into(),
            article_id: article_id.into(),
            edit_count,
        }
    }
}
