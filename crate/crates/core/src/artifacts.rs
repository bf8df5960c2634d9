//! Model directories: everything the recommender and the HTTP service need,
//! written by the topic-building step.
//!
//! ```text
//! meta.json           method, question count, list length, seed
//! topics.bin          article × topic matrix (dense binary)
//! latents.bin         article latent rows used for diversification
//! questionnaire.json  the questionnaire document
//! articles.idx        article ids, line number = row index
//! titles.tsv          index \t title
//! edit_counts.tsv     article_id \t total edits
//! views.tsv           article_id \t total views (optional)
//! P.bin Q.bin Qbar.bin training.txt   joint method only
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{read_index_file, read_titles, write_index_file, write_titles};
use crate::error::{Error, Result};
use crate::numerics::io::{read_dense, write_dense};
use crate::numerics::{tfidf, DenseMatrix};
use crate::questionnaire::{
    generate_questions, LikertResponse, QuestionnaireDocument, DEFAULT_CLOUD_TERMS,
    DEFAULT_LIST_LEN, DEFAULT_QUESTIONS,
};
use crate::recommender::{
    diversify, interest_vector, load_view_counts, top_k, RecMethod, RecommendationList,
    DEFAULT_POOL, DEFAULT_POPULAR_POOL,
};
use crate::topics::{
    build_qbar, collab_topics, content_topics, grid_search, train_joint, GridSearchConfig,
    GridSearchResult, HyperParams, JointModel, TopicMatrix, TopicMethod,
};
use crate::Corpus;

pub const MODEL_VERSION: &str = "coldstart-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub version: String,
    pub method: TopicMethod,
    pub questions: usize,
    pub list_len: usize,
    pub seed: u64,
    pub n_articles: usize,
}

#[derive(Debug, Clone)]
pub struct ModelArtifacts {
    pub meta: ModelMeta,
    /// Every extracted topic; the first `meta.questions` back the questions.
    pub topics: TopicMatrix,
    pub latents: DenseMatrix,
    pub article_ids: Vec<String>,
    pub titles: Vec<String>,
    pub edit_counts: Vec<f64>,
    pub views: Option<Vec<f64>>,
    pub questionnaire: QuestionnaireDocument,
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub method: TopicMethod,
    pub questions: usize,
    pub list_len: usize,
    pub cloud_terms: usize,
    /// Extracted topic count; also the joint model's latent width.
    pub latent_dims: usize,
    pub hyperparams: HyperParams,
    /// Joint only: pick α, λ, θ by grid search before the final fit.
    pub grid: Option<GridSearchConfig>,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        let hyperparams = HyperParams::default();
        BuildConfig {
            method: TopicMethod::Joint,
            questions: DEFAULT_QUESTIONS,
            list_len: DEFAULT_LIST_LEN,
            cloud_terms: DEFAULT_CLOUD_TERMS,
            latent_dims: hyperparams.latent_dims,
            hyperparams,
            grid: None,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct BuildOutput {
    pub artifacts: ModelArtifacts,
    pub joint: Option<JointModel>,
    pub grid: Option<GridSearchResult>,
}

/// Extracts topics with the configured method and writes the questionnaire.
pub fn build_model(corpus: &Corpus, views: Option<Vec<f64>>, config: &BuildConfig) -> Result<BuildOutput> {
    if config.questions == 0 {
        return Err(Error::InvalidArgument("need at least one question".into()));
    }
    let n = corpus.n_articles();
    let weights = tfidf(&corpus.term_counts)?;
    // one extra SVD component is computed and discarded
    let max_rank = |rows: usize| rows.min(n).saturating_sub(1);
    let mut dims = config.latent_dims.max(config.questions);
    let limit = match config.method {
        TopicMethod::Collab => max_rank(corpus.n_users()),
        _ => max_rank(corpus.vocabulary.len()),
    };
    if dims > limit {
        warn!("reducing latent width from {dims} to {limit} to fit the corpus");
        dims = limit;
    }
    if dims < config.questions {
        return Err(Error::InsufficientArticles {
            needed: config.questions + 1,
            available: limit + 1,
        });
    }

    let mut joint = None;
    let mut grid = None;
    let (topics, latents) = match config.method {
        TopicMethod::Content => {
            let t = content_topics(&weights, dims, config.seed)?;
            let l = t.topics.clone();
            (t, l)
        }
        TopicMethod::Collab => {
            let t = collab_topics(&corpus.edits, dims, config.seed)?;
            let l = t.topics.clone();
            (t, l)
        }
        TopicMethod::Joint => {
            let content = content_topics(&weights, dims, config.seed)?;
            let qbar = build_qbar(&content, dims)?;
            let mut hp = HyperParams {
                latent_dims: dims,
                ..config.hyperparams.clone()
            };
            if let Some(grid_config) = &config.grid {
                let grid_config = GridSearchConfig {
                    base: hp.clone(),
                    ..grid_config.clone()
                };
                let result = grid_search(&corpus.edits, &qbar, &grid_config, config.seed)?;
                hp = result.best().hyperparams.clone();
                info!(
                    "grid search picked alpha={} lambda={} theta={}",
                    hp.alpha, hp.lambda, hp.theta
                );
                grid = Some(result);
            }
            let model = train_joint(&corpus.edits, &qbar, &hp, config.seed)?;
            let t = model.topics();
            let l = model.q.clone();
            joint = Some(model);
            (t, l)
        }
    };

    let mut questionnaire = generate_questions(&topics.truncated(config.questions)?, config.list_len, config.questions)?;
    questionnaire.attach_word_clouds(&weights, &corpus.vocabulary, config.cloud_terms);
    let document = questionnaire.to_document(&corpus.article_ids, &corpus.titles);

    if let Some(v) = &views {
        if v.len() != n {
            return Err(Error::Dimension(format!("{} view counts for {n} articles", v.len())));
        }
    }
    let artifacts = ModelArtifacts {
        meta: ModelMeta {
            version: MODEL_VERSION.to_string(),
            method: config.method,
            questions: config.questions,
            list_len: config.list_len,
            seed: config.seed,
            n_articles: n,
        },
        topics,
        latents,
        article_ids: corpus.article_ids.clone(),
        titles: corpus.titles.clone(),
        edit_counts: corpus.edits.col_sums(),
        views,
        questionnaire: document,
    };
    Ok(BuildOutput {
        artifacts,
        joint,
        grid,
    })
}

fn write_counts(path: &Path, ids: &[String], counts: &[f64]) -> Result<()> {
    let lines: Vec<String> = ids
        .iter()
        .zip(counts)
        .map(|(id, c)| format!("{id}\t{c}"))
        .collect();
    write_index_file(path, &lines)
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Writes P, Q, Q̄ and a plain-text training record.
pub fn save_joint_model(dir: &Path, model: &JointModel) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_dense(&dir.join("P.bin"), &model.p)?;
    write_dense(&dir.join("Q.bin"), &model.q)?;
    write_dense(&dir.join("Qbar.bin"), &model.qbar)?;
    let mut log = String::new();
    let hp = serde_json::to_string(&model.hyperparams).expect("serializable");
    let _ = writeln!(log, "hyperparameters\t{hp}");
    let _ = writeln!(log, "initial_loss\t{:e}", model.initial_loss);
    for (i, loss) in model.epoch_losses.iter().enumerate() {
        let _ = writeln!(log, "epoch {}\t{loss:e}", i + 1);
    }
    write_text(&dir.join("training.txt"), &log)
}

pub fn load_joint_model(dir: &Path) -> Result<JointModel> {
    let path = dir.join("training.txt");
    let log = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut hyperparams = None;
    let mut initial_loss = f64::NAN;
    let mut epoch_losses = Vec::new();
    for line in log.lines() {
        let (key, value) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(&path, format!("bad line {line:?}")))?;
        let number = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::format(&path, format!("bad number {value:?}")))
        };
        match key {
            "hyperparameters" => {
                hyperparams = Some(
                    serde_json::from_str(value).map_err(|e| Error::format(&path, e.to_string()))?,
                )
            }
            "initial_loss" => initial_loss = number()?,
            k if k.starts_with("epoch ") => epoch_losses.push(number()?),
            _ => return Err(Error::format(&path, format!("unknown key {key:?}"))),
        }
    }
    Ok(JointModel {
        p: read_dense(&dir.join("P.bin"))?,
        q: read_dense(&dir.join("Q.bin"))?,
        qbar: read_dense(&dir.join("Qbar.bin"))?,
        hyperparams: hyperparams.ok_or_else(|| Error::format(&path, "missing hyperparameters"))?,
        initial_loss,
        epoch_losses,
    })
}

/// Options for turning questionnaire answers into a list.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendOptions {
    pub n_out: usize,
    /// Candidates drawn before diversifying.
    pub pool: usize,
    pub diversify: bool,
    pub seed: u64,
}

impl Default for RecommendOptions {
    fn default() -> Self {
        RecommendOptions {
            n_out: 5,
            pool: DEFAULT_POOL,
            diversify: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendations {
    pub list: RecommendationList,
    /// The answers carried no signal and a popularity list was served.
    pub fallback: bool,
}

impl ModelArtifacts {
    pub fn n_articles(&self) -> usize {
        self.article_ids.len()
    }

    pub fn question_topics(&self) -> Result<TopicMatrix> {
        self.topics.truncated(self.meta.questions)
    }

    /// View-pop when view counts were supplied, Edit-pop otherwise.
    pub fn fallback_method(&self) -> RecMethod {
        if self.views.is_some() {
            RecMethod::ViewPop
        } else {
            RecMethod::EditPop
        }
    }

    /// Popular articles: top of the popularity ranking, then the same
    /// cluster-sampling step as questionnaire lists.
    pub fn popular_list(&self, method: RecMethod, n_out: usize, seed: u64) -> Result<RecommendationList> {
        let counts = match method {
            RecMethod::EditPop => &self.edit_counts,
            RecMethod::ViewPop => self
                .views
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("model has no view counts".into()))?,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "{other} is not a popularity baseline"
                )))
            }
        };
        let pool_size = DEFAULT_POPULAR_POOL.max(n_out).min(self.n_articles());
        let pool = top_k(counts, pool_size, &Default::default(), method)?;
        diversify(&pool, &self.latents, n_out, seed)
    }

    pub fn recommend(&self, responses: &[LikertResponse], opts: &RecommendOptions) -> Result<Recommendations> {
        let topics = self.question_topics()?;
        let iv = interest_vector(responses, &topics)?;
        if !iv.has_signal() {
            return Ok(Recommendations {
                list: self.popular_list(self.fallback_method(), opts.n_out, opts.seed)?,
                fallback: true,
            });
        }
        let list = if opts.diversify {
            let pool_size = opts.pool.max(opts.n_out).min(self.n_articles());
            let pool = top_k(&iv.scores, pool_size, &Default::default(), RecMethod::QBased)?;
            diversify(&pool, &self.latents, opts.n_out, opts.seed)?
        } else {
            top_k(&iv.scores, opts.n_out, &Default::default(), RecMethod::QBased)?
        };
        Ok(Recommendations {
            list,
            fallback: false,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = serde_json::to_string_pretty(&self.meta).expect("serializable");
        write_text(&dir.join("meta.json"), &(meta + "\n"))?;
        write_dense(&dir.join("topics.bin"), &self.topics.topics)?;
        write_dense(&dir.join("latents.bin"), &self.latents)?;
        self.questionnaire.save(&dir.join("questionnaire.json"))?;
        write_index_file(&dir.join("articles.idx"), &self.article_ids)?;
        write_titles(&dir.join("titles.tsv"), &self.titles)?;
        write_counts(&dir.join("edit_counts.tsv"), &self.article_ids, &self.edit_counts)?;
        match &self.views {
            Some(v) => write_counts(&dir.join("views.tsv"), &self.article_ids, v)?,
            None => {
                let stale = dir.join("views.tsv");
                if stale.exists() {
                    fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
                }
            }
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        let body = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: ModelMeta =
            serde_json::from_str(&body).map_err(|e| Error::format(&meta_path, e.to_string()))?;
        if meta.version != MODEL_VERSION {
            return Err(Error::format(&meta_path, format!("unsupported version {:?}", meta.version)));
        }
        let article_ids = read_index_file(&dir.join("articles.idx"))?;
        let n = article_ids.len();
        let topics = TopicMatrix::new(read_dense(&dir.join("topics.bin"))?, meta.method);
        let latents = read_dense(&dir.join("latents.bin"))?;
        if topics.n_articles() != n || latents.n_rows() != n || meta.n_articles != n {
            return Err(Error::format(dir, "artifact shapes disagree with articles.idx"));
        }
        if topics.n_topics() < meta.questions {
            return Err(Error::format(dir, "fewer topics than questions"));
        }
        let index: HashMap<&str, usize> = article_ids.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
        let edit_counts = load_view_counts(&dir.join("edit_counts.tsv"), &index)?;
        let views_path = dir.join("views.tsv");
        let views = if views_path.exists() {
            Some(load_view_counts(&views_path, &index)?)
        } else {
            None
        };
        let titles_path = dir.join("titles.tsv");
        let titles = if titles_path.exists() {
            read_titles(&titles_path, n)?
        } else {
            article_ids.clone()
        };
        let questionnaire = QuestionnaireDocument::load(&dir.join("questionnaire.json"))?;
        if questionnaire.questions.len() != meta.questions {
            return Err(Error::format(dir, "questionnaire length disagrees with meta.json"));
        }
        Ok(ModelArtifacts {
            meta,
            topics,
            latents,
            article_ids,
            titles,
            edit_counts,
            views,
            questionnaire,
        })
    }
}
