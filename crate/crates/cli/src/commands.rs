use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use coldstart_core::artifacts::{build_model, save_joint_model, BuildConfig, ModelArtifacts, RecommendOptions};
use coldstart_core::corpus::{
    filter_corpus, ingest_articles, ingest_edits, load_corpus, save_corpus, FilterConfig, IngestReport,
};
use coldstart_core::evaluation::{
    cohesion_scores, cohesion_summary, holdout_users, run_offline_eval, write_reports, CohesionRow, EvalConfig,
    EvalMethod, SeptileMode, SimulationResult,
};
use coldstart_core::questionnaire::LikertResponse;
use coldstart_core::recommender::{load_view_counts, train_cf, CfParams};
use coldstart_core::topics::{GridSearchConfig, HyperParams, TopicMethod};
use coldstart_core::Corpus;
use coldstart_service::{AppState, ServiceConfig};
use log::{info, warn};

use crate::{MethodArg, SeptileArg};

const VIEWS_FILE: &str = "views.tsv";

pub struct PreprocessArgs {
    pub articles: PathBuf,
    pub edits: PathBuf,
    pub out: PathBuf,
    pub min_df: usize,
    pub max_df: f64,
    pub min_edits: u64,
    pub min_tokens: usize,
    pub keep_lists: bool,
    pub views: Option<PathBuf>,
}

fn report_malformed(path: &Path, report: &IngestReport) {
    for e in report.errors.iter().take(10) {
        warn!("{}:{}: {}", path.display(), e.line, e.message);
    }
    if report.errors.len() > 10 {
        warn!("{}: {} more malformed lines", path.display(), report.errors.len() - 10);
    }
}

fn write_views(path: &Path, ids: &[String], views: &[f64]) -> Result<()> {
    let mut body = String::new();
    for (id, v) in ids.iter().zip(views) {
        body.push_str(&format!("{id}\t{v}\n"));
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

pub fn preprocess(args: PreprocessArgs) -> Result<()> {
    let (articles, article_report) = ingest_articles(&args.articles)?;
    report_malformed(&args.articles, &article_report);
    let (edits, edit_report) = ingest_edits(&args.edits)?;
    report_malformed(&args.edits, &edit_report);
    info!(
        "read {} articles and {} (user, article) pairs",
        articles.len(),
        edits.len()
    );

    let config = FilterConfig {
        min_df: args.min_df,
        max_df_fraction: args.max_df,
        min_user_edits: args.min_edits,
        min_article_edits: args.min_edits,
        min_tokens: args.min_tokens,
        drop_list_like: !args.keep_lists,
        ..FilterConfig::default()
    };
    let filtered = filter_corpus(&articles, &edits, &config)?;
    let corpus = filtered.into_corpus();
    println!(
        "kept {} articles, {} users, {} terms, {} edit cells",
        corpus.n_articles(),
        corpus.n_users(),
        corpus.vocabulary.len(),
        corpus.edits.nnz()
    );
    save_corpus(&args.out, &corpus)?;

    if let Some(path) = &args.views {
        let index: HashMap<&str, usize> = corpus
            .article_ids
            .iter()
            .enumerate()
            .map(|(i, a)| (a.as_str(), i))
            .collect();
        let views = load_view_counts(path, &index)?;
        write_views(&args.out.join(VIEWS_FILE), &corpus.article_ids, &views)?;
    }
    Ok(())
}

/// View counts stored beside a preprocessed corpus, if any.
fn corpus_views(dir: &Path, corpus: &Corpus) -> Result<Option<Vec<f64>>> {
    let path = dir.join(VIEWS_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let index: HashMap<&str, usize> = corpus
        .article_ids
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    Ok(Some(load_view_counts(&path, &index)?))
}

pub struct BuildArgs {
    pub method: MethodArg,
    pub corpus: PathBuf,
    pub k: usize,
    pub list_len: usize,
    pub cloud_terms: usize,
    pub dims: usize,
    pub grid: bool,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn build_topics(args: BuildArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let views = corpus_views(&args.corpus, &corpus)?;
    let method = match args.method {
        MethodArg::Content => TopicMethod::Content,
        MethodArg::Collab => TopicMethod::Collab,
        MethodArg::Joint => TopicMethod::Joint,
    };
    let defaults = HyperParams::default();
    let hyperparams = HyperParams {
        alpha: args.alpha.unwrap_or(defaults.alpha),
        lambda: args.lambda.unwrap_or(defaults.lambda),
        theta: args.theta.unwrap_or(defaults.theta),
        epochs: args.epochs.unwrap_or(defaults.epochs),
        learning_rate: args.lr.unwrap_or(defaults.learning_rate),
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        latent_dims: args.dims,
        ..defaults
    };
    if args.grid && method != TopicMethod::Joint {
        warn!("--grid only applies to the joint method; ignoring it");
    }
    let config = BuildConfig {
        method,
        questions: args.k,
        list_len: args.list_len,
        cloud_terms: args.cloud_terms,
        latent_dims: args.dims,
        hyperparams,
        grid: (args.grid && method == TopicMethod::Joint).then(|| GridSearchConfig {
            cohesion_topics: args.k,
            cohesion_n: args.list_len,
            ..GridSearchConfig::default()
        }),
        seed: args.seed,
    };
    let output = build_model(&corpus, views, &config)?;
    output.artifacts.save(&args.out)?;
    if let Some(model) = &output.joint {
        save_joint_model(&args.out, model)?;
        info!(
            "joint objective {:.6e} -> {:.6e} over {} epochs",
            model.initial_loss,
            model.epoch_losses.last().copied().unwrap_or(model.initial_loss),
            model.epoch_losses.len()
        );
    }
    if let Some(grid) = &output.grid {
        let path = args.out.join("grid.json");
        fs::write(&path, serde_json::to_string_pretty(grid)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "{} model with {} questions written to {}",
        method,
        args.k,
        args.out.display()
    );
    Ok(())
}

fn read_responses(path: &Path) -> Result<Vec<LikertResponse>> {
    let body = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    body.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<LikertResponse>().map_err(Into::into))
        .collect()
}

pub fn recommend(model: &Path, responses: &Path, k: usize, diversify: Option<usize>, seed: u64) -> Result<()> {
    let artifacts = ModelArtifacts::load(model)?;
    let responses = read_responses(responses)?;
    if responses.len() != artifacts.meta.questions {
        bail!(
            "{} responses for a {}-question model",
            responses.len(),
            artifacts.meta.questions
        );
    }
    let opts = match diversify {
        Some(n) => RecommendOptions {
            n_out: n,
            pool: k,
            diversify: true,
            seed,
        },
        None => RecommendOptions {
            n_out: k,
            diversify: false,
            seed,
            ..RecommendOptions::default()
        },
    };
    let recs = artifacts.recommend(&responses, &opts)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "# method={} fallback={}", recs.list.method, recs.fallback)?;
    for (rank, r) in recs.list.items.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            rank + 1,
            artifacts.article_ids[r.article],
            artifacts.titles[r.article],
            r.score
        )?;
    }
    Ok(())
}

pub struct EvaluateArgs {
    pub corpus: PathBuf,
    pub models: PathBuf,
    pub methods: Vec<String>,
    pub k: usize,
    pub holdout: usize,
    pub seed: u64,
    pub septiles: SeptileArg,
    pub include_seen: bool,
    pub out: PathBuf,
}

fn load_model_for(models: &Path, dir_name: &str, corpus: &Corpus) -> Result<ModelArtifacts> {
    let dir = models.join(dir_name);
    let a = ModelArtifacts::load(&dir).with_context(|| format!("loading model {}", dir.display()))?;
    if a.article_ids != corpus.article_ids {
        bail!("model {} was built on a different corpus", dir.display());
    }
    Ok(a)
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let views = corpus_views(&args.corpus, &corpus)?;
    let users: Vec<usize> = (0..corpus.n_users()).collect();
    let holdouts = holdout_users(&corpus.edits, &users, args.holdout, args.seed)?;
    info!(
        "{} test users, {} excluded for having at most {} edited articles",
        holdouts.users.len(),
        holdouts.excluded,
        args.holdout
    );
    let config = EvalConfig {
        k: args.k,
        septile_mode: match args.septiles {
            SeptileArg::Global => SeptileMode::Global,
            SeptileArg::PerQuestion => SeptileMode::PerQuestion,
        },
        exclude_seen: !args.include_seen,
    };

    let mut loaded: HashMap<&str, ModelArtifacts> = HashMap::new();
    let mut cohesion = Vec::new();
    let mut recall: Vec<SimulationResult> = Vec::new();
    for name in &args.methods {
        let name = name.trim();
        let result = match name {
            "joint" | "content" | "collab" | "collab-nostrat" => {
                let dir = if name == "collab-nostrat" { "collab" } else { name };
                if !loaded.contains_key(dir) {
                    loaded.insert(dir, load_model_for(&args.models, dir, &corpus)?);
                }
                let model = &loaded[dir];
                let topics = model.question_topics()?;
                if name != "collab-nostrat" {
                    let scores = cohesion_scores(&topics.topics, &model.latents, model.meta.list_len)?;
                    cohesion.push(CohesionRow {
                        method: name.to_string(),
                        questions: topics.n_topics(),
                        report: cohesion_summary(&scores, args.seed)?,
                    });
                }
                let method = EvalMethod::Questionnaire {
                    topics: &topics,
                    stratified: name != "collab-nostrat",
                };
                run_offline_eval(name, method, &holdouts, &config)?
            }
            "edit-pop" => run_offline_eval(name, EvalMethod::EditPop, &holdouts, &config)?,
            "view-pop" => {
                let Some(v) = &views else {
                    bail!("view-pop needs {} in the corpus directory", VIEWS_FILE);
                };
                run_offline_eval(name, EvalMethod::ViewPop(v), &holdouts, &config)?
            }
            "cf" => {
                let model = train_cf(&holdouts.train, &CfParams::default(), args.seed)?;
                run_offline_eval(name, EvalMethod::Cf(&model), &holdouts, &config)?
            }
            other => bail!("unknown method {other:?}"),
        };
        info!("{name}: mean recall@{} = {:.5}", args.k, result.summary.mean);
        recall.push(result);
    }
    write_reports(&args.out, &cohesion, &recall, holdouts.excluded)?;
    print!(
        "{}",
        coldstart_core::evaluation::text_summary(&cohesion, &recall, holdouts.excluded)
    );
    Ok(())
}

pub fn serve(config: ServiceConfig, host: &str, port: u16) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let state = Arc::new(AppState::open(config)?);
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("binding {host}:{port}"))?;
        let addr = listener.local_addr()?;
        info!("listening on http://{addr}");
        // scripts and tests read the bound address from the first stdout line
        println!("listening on {addr}");
        std::io::stdout().flush()?;
        coldstart_service::serve(listener, state).await?;
        Ok(())
    })
}
