//! `coldstart`: preprocess a dump, extract topics, answer questionnaires,
//! evaluate offline and serve the questionnaire over HTTP.

mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "coldstart", version, about = "Questionnaire-based cold-start article recommendation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Content,
    Collab,
    Joint,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SeptileArg {
    Global,
    PerQuestion,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest articles and edit logs, apply the corpus filters and write a corpus directory.
    Preprocess {
        /// Line-delimited JSON objects with id, title and text.
        #[arg(long)]
        articles: PathBuf,
        /// Tab-separated user, article id, edit count.
        #[arg(long)]
        edits: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        min_df: usize,
        #[arg(long, default_value_t = 0.10)]
        max_df: f64,
        /// Minimum total edits for both users and articles.
        #[arg(long, default_value_t = 20)]
        min_edits: u64,
        #[arg(long, default_value_t = 100)]
        min_tokens: usize,
        /// Keep articles whose titles look like lists.
        #[arg(long)]
        keep_lists: bool,
        /// Tab-separated article id and total views.
        #[arg(long)]
        views: Option<PathBuf>,
    },
    /// Extract topics, generate the questionnaire and write a model directory.
    BuildTopics {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        corpus: PathBuf,
        /// Number of questions.
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Articles per list.
        #[arg(long, default_value_t = 20)]
        list_len: usize,
        #[arg(long, default_value_t = 15)]
        cloud_terms: usize,
        /// Latent width (number of extracted topics).
        #[arg(long, default_value_t = 200)]
        dims: usize,
        /// Joint only: search alpha, lambda and theta on a validation split first.
        #[arg(long)]
        grid: bool,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a file of Likert answers into a ranked list.
    Recommend {
        #[arg(long)]
        model: PathBuf,
        /// One level name per line, in question order.
        #[arg(long)]
        responses: PathBuf,
        #[arg(long, default_value_t = 300)]
        k: usize,
        /// Cluster the top k and keep this many articles.
        #[arg(long)]
        diversify: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Offline cohesion and simulated-recall evaluation.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        /// Directory holding one model directory per topic method.
        #[arg(long)]
        models: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "joint,content,collab,collab-nostrat,edit-pop,view-pop,cf")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 300)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        holdout: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SeptileArg::Global)]
        septiles: SeptileArg,
        /// Allow a user's remaining edited articles in their list.
        #[arg(long)]
        include_seen: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the questionnaire and recommendations over HTTP.
    Serve {
        #[arg(long, env = "COLDSTART_ARTIFACTS")]
        artifacts: PathBuf,
        #[arg(long, env = "COLDSTART_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "COLDSTART_HOST", default_value = "127.0.0.1")]
        host: String,
        /// Append-only session log.
        #[arg(long, default_value = "sessions.jsonl")]
        log: PathBuf,
        #[arg(long)]
        comparison_mode: bool,
        #[arg(long)]
        allow_partial: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_sessions_per_ip: usize,
    },
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Preprocess {
            articles,
            edits,
            out,
            min_df,
            max_df,
            min_edits,
            min_tokens,
            keep_lists,
            views,
        } => commands::preprocess(commands::PreprocessArgs {
            articles,
            edits,
            out,
            min_df,
            max_df,
            min_edits,
            min_tokens,
            keep_lists,
            views,
        }),
        Command::BuildTopics {
            method,
            corpus,
            k,
            list_len,
            cloud_terms,
            dims,
            grid,
            alpha,
            lambda,
            theta,
            epochs,
            lr,
            batch_size,
            seed,
            out,
        } => commands::build_topics(commands::BuildArgs {
            method,
            corpus,
            k,
            list_len,
            cloud_terms,
            dims,
            grid,
            alpha,
            lambda,
            theta,
            epochs,
            lr,
            batch_size,
            seed,
            out,
        }),
        Command::Recommend {
            model,
            responses,
            k,
            diversify,
            seed,
        } => commands::recommend(&model, &responses, k, diversify, seed),
        Command::Evaluate {
            corpus,
            models,
            methods,
            k,
            holdout,
            seed,
            septiles,
            include_seen,
            out,
        } => commands::evaluate(commands::EvaluateArgs {
            corpus,
            models,
            methods,
            k,
            holdout,
            seed,
            septiles,
            include_seen,
            out,
        }),
        Command::Serve {
            artifacts,
            port,
            host,
            log,
            comparison_mode,
            allow_partial,
            seed,
            max_sessions_per_ip,
        } => {
            let mut config = coldstart_service::ServiceConfig::new(Some(artifacts), log);
            config.comparison_mode = comparison_mode;
            config.allow_partial = allow_partial;
            config.seed = seed;
            config.max_sessions_per_client = max_sessions_per_ip;
            commands::serve(config, &host, port)
        }
    }
}
