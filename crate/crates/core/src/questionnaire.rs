//! Pairwise-comparison questions built from topic vectors, word-cloud term
//! summaries, and the 7-level Likert response scale.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SparseMatrix;
use crate::ranking::{bottom_n, top_n};
use crate::topics::TopicMatrix;

pub const PROMPT: &str =
    "Between lists A and B, which one contains more articles that you would be interested in editing?";

pub const DOCUMENT_VERSION: &str = "coldstart-questionnaire/1";

pub const DEFAULT_LIST_LEN: usize = 20;
pub const DEFAULT_QUESTIONS: usize = 20;
pub const DEFAULT_CLOUD_TERMS: usize = 15;

/// Answer to one question, from a great preference for list A to a great
/// preference for list B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikertResponse {
    AGreat,
    AModerate,
    ASlight,
    #[serde(rename = "none")]
    NoPreference,
    BSlight,
    BModerate,
    BGreat,
}

impl LikertResponse {
    /// Scale order, A-great first.
    pub const ALL: [LikertResponse; 7] = [
        LikertResponse::AGreat,
        LikertResponse::AModerate,
        LikertResponse::ASlight,
        LikertResponse::NoPreference,
        LikertResponse::BSlight,
        LikertResponse::BModerate,
        LikertResponse::BGreat,
    ];

    pub fn score(self) -> f64 {
        match self {
            LikertResponse::AGreat => 1.0,
            LikertResponse::AModerate => 2.0 / 3.0,
            LikertResponse::ASlight => 1.0 / 3.0,
            LikertResponse::NoPreference => 0.0,
            LikertResponse::BSlight => -1.0 / 3.0,
            LikertResponse::BModerate => -2.0 / 3.0,
            LikertResponse::BGreat => -1.0,
        }
    }

    /// Swaps the A and B sides.
    pub fn mirror(self) -> Self {
        match self {
            LikertResponse::AGreat => LikertResponse::BGreat,
            LikertResponse::AModerate => LikertResponse::BModerate,
            LikertResponse::ASlight => LikertResponse::BSlight,
            LikertResponse::NoPreference => LikertResponse::NoPreference,
            LikertResponse::BSlight => LikertResponse::ASlight,
            LikertResponse::BModerate => LikertResponse::AModerate,
            LikertResponse::BGreat => LikertResponse::AGreat,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LikertResponse::AGreat => "a-great",
            LikertResponse::AModerate => "a-moderate",
            LikertResponse::ASlight => "a-slight",
            LikertResponse::NoPreference => "none",
            LikertResponse::BSlight => "b-slight",
            LikertResponse::BModerate => "b-moderate",
            LikertResponse::BGreat => "b-great",
        }
    }
}

/// Numeric weight of a response.
pub fn likert_to_score(r: LikertResponse) -> f64 {
    r.score()
}

impl fmt::Display for LikertResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LikertResponse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LikertResponse::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown Likert level {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListEntry {
    pub article: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudTerm {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub topic_index: usize,
    /// Highest-scoring articles, descending.
    pub list_a: Vec<ListEntry>,
    /// Lowest-scoring articles, ascending.
    pub list_b: Vec<ListEntry>,
    pub cloud_a: Vec<CloudTerm>,
    pub cloud_b: Vec<CloudTerm>,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Questionnaire {
    pub questions: Vec<Question>,
    pub list_len: usize,
}

impl Questionnaire {
    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    /// Fills every question's word clouds from a term × article TF-IDF matrix.
    pub fn attach_word_clouds(&mut self, tfidf: &SparseMatrix, vocabulary: &[String], m: usize) {
        let index = WordCloudIndex::new(tfidf);
        for q in &mut self.questions {
            let a: Vec<usize> = q.list_a.iter().map(|e| e.article).collect();
            let b: Vec<usize> = q.list_b.iter().map(|e| e.article).collect();
            q.cloud_a = index.terms(&a, vocabulary, m);
            q.cloud_b = index.terms(&b, vocabulary, m);
        }
    }

    pub fn to_document(&self, article_ids: &[String], titles: &[String]) -> QuestionnaireDocument {
        let entries = |list: &[ListEntry]| -> Vec<ArticleDoc> {
            list.iter()
                .map(|e| ArticleDoc {
                    id: article_ids[e.article].clone(),
                    title: titles[e.article].clone(),
                    score: e.score,
                })
                .collect()
        };
        QuestionnaireDocument {
            version: DOCUMENT_VERSION.to_string(),
            prompt: PROMPT.to_string(),
            list_len: self.list_len,
            questions: self
                .questions
                .iter()
                .map(|q| QuestionDoc {
                    topic_index: q.topic_index,
                    list_a: entries(&q.list_a),
                    list_b: entries(&q.list_b),
                    cloud_a: q.cloud_a.clone(),
                    cloud_b: q.cloud_b.clone(),
                })
                .collect(),
        }
    }
}

/// Builds one question per topic column: list A holds the `n` highest
/// entries, list B the `n` lowest, ties broken by article index.
pub fn generate_questions(topics: &TopicMatrix, n: usize, k: usize) -> Result<Questionnaire> {
    if topics.n_topics() < k {
        return Err(Error::InvalidArgument(format!(
            "{k} questions requested from {} topics",
            topics.n_topics()
        )));
    }
    if topics.n_articles() < 2 * n {
        return Err(Error::InsufficientArticles {
            needed: 2 * n,
            available: topics.n_articles(),
        });
    }
    let mut questions = Vec::with_capacity(k);
    for t in 0..k {
        let col = topics.column(t);
        let a = top_n(&col, n);
        let b = bottom_n(&col, n);
        if a.iter().any(|i| b.contains(i)) {
            return Err(Error::DegenerateTopic { topic: t });
        }
        let entries = |idx: Vec<usize>| -> Vec<ListEntry> {
            idx.into_iter()
                .map(|article| ListEntry {
                    article,
                    score: col[article],
                })
                .collect()
        };
        questions.push(Question {
            topic_index: t,
            list_a: entries(a),
            list_b: entries(b),
            cloud_a: Vec::new(),
            cloud_b: Vec::new(),
            prompt: PROMPT.to_string(),
        });
    }
    Ok(Questionnaire {
        questions,
        list_len: n,
    })
}

/// Article-major view of a TF-IDF matrix for repeated cloud queries.
pub struct WordCloudIndex {
    by_article: SparseMatrix,
}

impl WordCloudIndex {
    pub fn new(tfidf: &SparseMatrix) -> Self {
        WordCloudIndex {
            by_article: tfidf.transpose(),
        }
    }

    /// Top `m` terms by TF-IDF summed over `articles`, ties by term index.
    pub fn terms(&self, articles: &[usize], vocabulary: &[String], m: usize) -> Vec<CloudTerm> {
        let mut totals = vec![0.0; self.by_article.n_cols()];
        for &a in articles {
            for (t, w) in self.by_article.row(a) {
                totals[t] += w;
            }
        }
        let present = totals.iter().filter(|&&w| w > 0.0).count();
        top_n(&totals, m.min(present))
            .into_iter()
            .map(|t| CloudTerm {
                term: vocabulary[t].clone(),
                weight: totals[t],
            })
            .collect()
    }
}

/// Top `m` terms for one list of articles.
pub fn wordcloud_terms(
    articles: &[usize],
    tfidf: &SparseMatrix,
    vocabulary: &[String],
    m: usize,
) -> Vec<CloudTerm> {
    if articles.is_empty() {
        return Vec::new();
    }
    WordCloudIndex::new(tfidf).terms(articles, vocabulary, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleDoc {
    pub id: String,
    pub title: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionDoc {
    pub topic_index: usize,
    pub list_a: Vec<ArticleDoc>,
    pub list_b: Vec<ArticleDoc>,
    pub cloud_a: Vec<CloudTerm>,
    pub cloud_b: Vec<CloudTerm>,
}

/// Serialized questionnaire consumed by the HTTP service and web client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireDocument {
    pub version: String,
    pub prompt: String,
    pub list_len: usize,
    pub questions: Vec<QuestionDoc>,
}

impl QuestionnaireDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document is always serializable")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: QuestionnaireDocument =
            serde_json::from_str(&body).map_err(|e| Error::format(path, e.to_string()))?;
        if doc.version != DOCUMENT_VERSION {
            return Err(Error::format(path, format!("unsupported version {:?}", doc.version)));
        }
        Ok(doc)
    }
}
