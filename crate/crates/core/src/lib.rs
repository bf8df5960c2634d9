//! Cold-start questionnaire engine: topic extraction from articles and edit
//! logs, pairwise-comparison question generation, Likert-to-recommendation
//! conversion, and an offline evaluation harness.

pub mod artifacts;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod numerics;
pub mod questionnaire;
pub mod ranking;
pub mod recommender;
pub mod synth;
pub mod topics;

use std::collections::HashMap;

pub use error::{Error, Result};

use numerics::SparseMatrix;

/// Index-keyed corpus as persisted by the preprocessing step.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub article_ids: Vec<String>,
    pub titles: Vec<String>,
    pub user_ids: Vec<String>,
    pub vocabulary: Vec<String>,
    /// users × articles raw edit counts.
    pub edits: SparseMatrix,
    /// vocabulary × articles raw term counts.
    pub term_counts: SparseMatrix,
}

impl Corpus {
    pub fn n_articles(&self) -> usize {
        self.article_ids.len()
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn article_index(&self) -> HashMap<&str, usize> {
        self.article_ids
            .iter()
            .enumerate()
            .map(|(i, a)| (a.as_str(), i))
            .collect()
    }

    pub fn user_index(&self) -> HashMap<&str, usize> {
        self.user_ids
            .iter()
            .enumerate()
            .map(|(i, u)| (u.as_str(), i))
            .collect()
    }
}
