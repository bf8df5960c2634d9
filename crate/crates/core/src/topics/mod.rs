//! Topic extraction: content-only and collaborative-only truncated SVD, and
//! the joint factorization anchored on content topics.

mod joint;
mod search;

pub use joint::{
    confidence, full_objective, joint_gradient, joint_loss, rating, sample_minibatch,
    sample_minibatch_with, train_joint, Cell, HyperParams, JointModel,
};
pub use search::{
    grid_search, validation_split, GridPoint, GridSearchConfig, GridSearchResult, ValidationSplit,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{row_normalize, truncated_svd, DenseMatrix, SparseMatrix};

/// Default number of latent dimensions for the joint model and its anchor.
pub const LATENT_DIMS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicMethod {
    Content,
    Collab,
    Joint,
}

impl fmt::Display for TopicMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopicMethod::Content => "content",
            TopicMethod::Collab => "collab",
            TopicMethod::Joint => "joint",
        })
    }
}

impl FromStr for TopicMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "content" => Ok(TopicMethod::Content),
            "collab" => Ok(TopicMethod::Collab),
            "joint" => Ok(TopicMethod::Joint),
            other => Err(Error::InvalidArgument(format!("unknown topic method {other:?}"))),
        }
    }
}

/// Article × topic matrix; column i is topic vector i.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMatrix {
    pub topics: DenseMatrix,
    pub method: TopicMethod,
}

impl TopicMatrix {
    pub fn new(topics: DenseMatrix, method: TopicMethod) -> Self {
        TopicMatrix { topics, method }
    }

    pub fn n_articles(&self) -> usize {
        self.topics.n_rows()
    }

    pub fn n_topics(&self) -> usize {
        self.topics.n_cols()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.topics.col(i)
    }

    /// The first `k` topics.
    pub fn truncated(&self, k: usize) -> Result<TopicMatrix> {
        if k > self.n_topics() {
            return Err(Error::InvalidArgument(format!(
                "asked for {k} topics, matrix has {}",
                self.n_topics()
            )));
        }
        Ok(TopicMatrix::new(self.topics.columns(0, k), self.method))
    }
}

/// Topics from a truncated SVD of a matrix whose columns are articles.
///
/// Computes rank `k + 1`, forms `V S`, drops the leading column (the
/// uncentered mean direction) and returns the next `k`.
fn svd_topics(m: &SparseMatrix, k: usize, seed: u64, method: TopicMethod) -> Result<TopicMatrix> {
    if k == 0 {
        return Ok(TopicMatrix::new(DenseMatrix::zeros(m.n_cols(), 0), method));
    }
    if m.nnz() == 0 {
        return Err(Error::RankDeficient(format!("{method} input matrix is all zeros")));
    }
    let svd = truncated_svd(m, k + 1, seed)?;
    let topics = DenseMatrix::from_fn(m.n_cols(), k, |r, c| {
        svd.v[(r, c + 1)] * svd.singular_values[c + 1]
    });
    Ok(TopicMatrix::new(topics, method))
}

/// Content-only topics from a term × article TF-IDF matrix.
pub fn content_topics(tfidf: &SparseMatrix, k: usize, seed: u64) -> Result<TopicMatrix> {
    svd_topics(tfidf, k, seed, TopicMethod::Content)
}

/// Collaborative-only topics from a user × article edit matrix.
pub fn collab_topics(edits: &SparseMatrix, k: usize, seed: u64) -> Result<TopicMatrix> {
    svd_topics(edits, k, seed, TopicMethod::Collab)
}

/// Row-normalized first `dims` content topics, the anchor for the joint
/// model's article latents.
pub fn build_qbar(content: &TopicMatrix, dims: usize) -> Result<DenseMatrix> {
    if content.n_topics() < dims {
        return Err(Error::InvalidArgument(format!(
            "anchor needs {dims} content topics, got {}",
            content.n_topics()
        )));
    }
    Ok(row_normalize(&content.topics.columns(0, dims)))
}
