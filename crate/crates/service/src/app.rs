//! Shared state and request handlers.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{ConnectInfo, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use coldstart_core::artifacts::{ModelArtifacts, RecommendOptions, Recommendations};
use coldstart_core::questionnaire::LikertResponse;
use coldstart_core::recommender::{RecMethod, RecommendationList};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{ApiError, ServiceError};
use crate::store::{now_millis, LogRecord, Session, SessionStatus, SessionStore};

/// The feedback prompts shown for every list pairing.
pub const FEEDBACK_PROMPTS: [&str; 3] = [
    "Among the two lists, which list has more articles that you would be interested in reading?",
    "Among the two lists, which list has more articles that you would be interested in editing?",
    "Among the two lists, which list has more articles that you would not be interested in at all, neither for reading nor for editing?",
];

/// Pairings a client may request per session.
pub const COMPARISON_PAIRS: usize = 6;

pub const DEFAULT_LIST_SIZE: usize = 5;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub artifacts: Option<PathBuf>,
    pub log_path: PathBuf,
    pub comparison_mode: bool,
    /// Lets clients complete a session with unanswered questions, which
    /// are recorded as "none".
    pub allow_partial: bool,
    /// Seed for diversification and baseline choice. Payloads depend on
    /// this and the responses only.
    pub seed: u64,
    pub max_sessions_per_client: usize,
}

impl ServiceConfig {
    pub fn new(artifacts: Option<PathBuf>, log_path: PathBuf) -> Self {
        ServiceConfig {
            artifacts,
            log_path,
            comparison_mode: false,
            allow_partial: false,
            seed: 0,
            max_sessions_per_client: 1000,
        }
    }
}

/// Loaded model plus the questionnaire body, rendered once.
pub struct Engine {
    pub artifacts: ModelArtifacts,
    questionnaire_body: String,
}

impl Engine {
    pub fn new(artifacts: ModelArtifacts) -> Self {
        let questionnaire_body = artifacts.questionnaire.to_json();
        Engine {
            artifacts,
            questionnaire_body,
        }
    }

    pub fn questions(&self) -> usize {
        self.artifacts.meta.questions
    }
}

pub struct AppState {
    pub config: ServiceConfig,
    pub engine: Option<Engine>,
    store: Mutex<SessionStore>,
}

impl AppState {
    /// Replays the session log and loads the artifact directory. A missing
    /// or unreadable artifact leaves the service up, answering 503 where a
    /// model is needed.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        let store = SessionStore::open(&config.log_path)?;
        let engine = match &config.artifacts {
            Some(dir) => match ModelArtifacts::load(dir) {
                Ok(a) => {
                    log::info!(
                        "loaded {} model with {} questions over {} articles from {}",
                        a.meta.method,
                        a.meta.questions,
                        a.n_articles(),
                        dir.display()
                    );
                    Some(Engine::new(a))
                }
                Err(e) => {
                    log::error!("cannot load artifacts from {}: {e}", dir.display());
                    None
                }
            },
            None => None,
        };
        Ok(Self::with_engine(config, engine, store))
    }

    pub fn with_engine(config: ServiceConfig, engine: Option<Engine>, store: SessionStore) -> Self {
        AppState {
            config,
            engine,
            store: Mutex::new(store),
        }
    }

    fn store(&self) -> MutexGuard<'_, SessionStore> {
        // a panic while holding the lock cannot leave a half-applied record
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn engine(&self) -> Result<&Engine, ApiError> {
        self.engine.as_ref().ok_or_else(ApiError::unavailable)
    }

    fn session(&self, id: &str) -> Result<Session, ApiError> {
        self.store()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/v1/questionnaire", get(questionnaire))
        .route("/api/v1/sessions", post(create_session))
        .route("/api/v1/sessions/{id}", get(session_view))
        .route("/api/v1/sessions/{id}/responses", post(submit_response))
        .route("/api/v1/sessions/{id}/complete", post(complete))
        .route("/api/v1/sessions/{id}/recommendations", get(recommendations))
        .route("/api/v1/sessions/{id}/comparison", get(comparison))
        .route("/api/v1/sessions/{id}/feedback", post(feedback))
        .with_state(state)
}

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

fn parse_level(s: &str) -> Result<LikertResponse, ApiError> {
    s.parse().map_err(|e: coldstart_core::error::Error| ApiError::bad_request(e.to_string()))
}

fn new_token() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    URL_SAFE_NO_PAD.encode(bytes)
}

async fn healthz(State(state): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "artifact": state.engine.is_some(),
        "sessions": state.store().len(),
    }))
}

async fn questionnaire(State(state): State<Shared>) -> Result<Response, ApiError> {
    let engine = state.engine()?;
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        engine.questionnaire_body.clone(),
    )
        .into_response())
}

async fn create_session(State(state): State<Shared>, request: Request) -> Result<Response, ApiError> {
    let questions = state.engine()?.questions();
    let client = request
        .extensions()
        .get::<ConnectInfo<SocketAddr>>()
        .map(|c| c.0.ip().to_string());
    let mut store = state.store();
    if let Some(c) = &client {
        if store.sessions_for_client(c) >= state.config.max_sessions_per_client {
            return Err(ApiError::new(
                StatusCode::TOO_MANY_REQUESTS,
                format!("session limit of {} reached for {c}", state.config.max_sessions_per_client),
            ));
        }
    }
    let id = new_token();
    let created_at = now_millis();
    store.record(LogRecord::Session {
        session_id: id.clone(),
        created_at,
        client,
    })?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "session_id": id, "created_at": created_at, "questions": questions })),
    )
        .into_response())
}

#[derive(Serialize)]
struct FeedbackView {
    pair: usize,
    prompt: usize,
    level: LikertResponse,
}

async fn session_view(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<serde_json::Value>, ApiError> {
    let s = state.session(&id)?;
    let feedback: Vec<FeedbackView> = s
        .feedback
        .iter()
        .map(|(&(pair, prompt), &level)| FeedbackView { pair, prompt, level })
        .collect();
    Ok(Json(json!({
        "session_id": s.id,
        "created_at": s.created_at,
        "status": s.status,
        "partial": s.partial,
        "questions": state.engine.as_ref().map(Engine::questions),
        "answered": s.responses.len(),
        "responses": s.responses,
        "feedback": feedback,
    })))
}

#[derive(Default, Deserialize)]
struct ResponseBody {
    question_index: Option<usize>,
    level: Option<String>,
}

async fn submit_response(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let body: ResponseBody = parse_body(&body)?;
    let mut store = state.store();
    let session = store
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))?;
    let k = state.engine()?.questions();
    if session.status == SessionStatus::Completed {
        return Err(ApiError::conflict("session is completed"));
    }
    let index = body
        .question_index
        .ok_or_else(|| ApiError::bad_request("missing question_index"))?;
    if index >= k {
        return Err(ApiError::bad_request(format!("question_index {index} outside [0, {k})")));
    }
    let level = parse_level(body.level.as_deref().ok_or_else(|| ApiError::bad_request("missing level"))?)?;
    store.record(LogRecord::Response {
        session_id: id.clone(),
        question_index: index,
        level,
        received_at: now_millis(),
    })?;
    let answered = store.get(&id).map_or(0, |s| s.responses.len());
    Ok(Json(json!({
        "session_id": id,
        "question_index": index,
        "level": level,
        "answered": answered,
    })))
}

#[derive(Default, Deserialize)]
struct CompleteBody {
    #[serde(default)]
    allow_partial: bool,
}

async fn complete(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let body: CompleteBody = parse_body(&body)?;
    let mut store = state.store();
    let session = store
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))?
        .clone();
    let k = state.engine()?.questions();
    if session.status == SessionStatus::Completed {
        return Ok(Json(json!({ "session_id": id, "status": "completed", "partial": session.partial })));
    }
    let missing: Vec<usize> = (0..k).filter(|i| !session.responses.contains_key(i)).collect();
    let partial = !missing.is_empty();
    if partial {
        if !(body.allow_partial && state.config.allow_partial) {
            return Err(ApiError::conflict(format!("{} of {k} questions unanswered", missing.len())));
        }
        for index in missing {
            store.record(LogRecord::Response {
                session_id: id.clone(),
                question_index: index,
                level: LikertResponse::NoPreference,
                received_at: now_millis(),
            })?;
        }
    }
    store.record(LogRecord::Complete {
        session_id: id.clone(),
        completed_at: now_millis(),
        partial,
    })?;
    Ok(Json(json!({ "session_id": id, "status": "completed", "partial": partial })))
}

#[derive(Serialize)]
struct ItemView<'a> {
    rank: usize,
    id: &'a str,
    title: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct ListView<'a> {
    method: RecMethod,
    fallback: bool,
    items: Vec<ItemView<'a>>,
}

fn list_view<'a>(artifacts: &'a ModelArtifacts, list: &RecommendationList, fallback: bool) -> ListView<'a> {
    ListView {
        method: list.method,
        fallback,
        items: list
            .items
            .iter()
            .enumerate()
            .map(|(i, r)| ItemView {
                rank: i + 1,
                id: &artifacts.article_ids[r.article],
                title: &artifacts.titles[r.article],
                score: r.score,
            })
            .collect(),
    }
}

/// Looks up a completed session and its ordered responses.
fn completed_responses(state: &AppState, id: &str) -> Result<Vec<LikertResponse>, ApiError> {
    let session = state.session(id)?;
    let k = state.engine()?.questions();
    if session.status != SessionStatus::Completed {
        return Err(ApiError::conflict("session is not completed"));
    }
    session
        .ordered_responses(k)
        .ok_or_else(|| ApiError::conflict("session is missing responses"))
}

fn recommend(engine: &Engine, responses: &[LikertResponse], k: usize, diversify: bool, seed: u64) -> Result<Recommendations, ApiError> {
    if k == 0 {
        let fallback = responses.iter().all(|&r| r == LikertResponse::NoPreference);
        let method = if fallback { engine.artifacts.fallback_method() } else { RecMethod::QBased };
        return Ok(Recommendations {
            list: RecommendationList { method, items: Vec::new() },
            fallback,
        });
    }
    let opts = RecommendOptions {
        n_out: k,
        diversify,
        seed,
        ..RecommendOptions::default()
    };
    Ok(engine.artifacts.recommend(responses, &opts)?)
}

#[derive(Deserialize)]
struct RecQuery {
    k: Option<usize>,
    diversify: Option<bool>,
}

async fn recommendations(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<RecQuery>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let responses = completed_responses(&state, &id)?;
    let engine = state.engine()?;
    let k = q.k.unwrap_or(DEFAULT_LIST_SIZE);
    if k > engine.artifacts.n_articles() {
        return Err(ApiError::bad_request(format!("k = {k} exceeds the catalogue")));
    }
    let recs = recommend(engine, &responses, k, q.diversify.unwrap_or(true), state.config.seed)?;
    Ok(Json(serde_json::to_value(list_view(&engine.artifacts, &recs.list, recs.fallback)).expect("serializable")))
}

#[derive(Deserialize)]
struct PairQuery {
    pair: Option<usize>,
}

fn check_pair(pair: usize) -> Result<(), ApiError> {
    if pair >= COMPARISON_PAIRS {
        return Err(ApiError::bad_request(format!("pair {pair} outside [0, {COMPARISON_PAIRS})")));
    }
    Ok(())
}

async fn comparison(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<PairQuery>,
) -> Result<Json<serde_json::Value>, ApiError> {
    if !state.config.comparison_mode {
        return Err(ApiError::not_found("comparison mode is disabled"));
    }
    let responses = completed_responses(&state, &id)?;
    let engine = state.engine()?;
    let pair = q.pair.unwrap_or(0);
    check_pair(pair)?;
    let seed = state.config.seed.wrapping_add(pair as u64);

    let ours = recommend(engine, &responses, DEFAULT_LIST_SIZE, true, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ba5e);
    let baseline = if engine.artifacts.views.is_some() && rng.random_bool(0.5) {
        RecMethod::ViewPop
    } else {
        RecMethod::EditPop
    };
    let theirs = engine.artifacts.popular_list(baseline, DEFAULT_LIST_SIZE, seed)?;
    let ours_view = list_view(&engine.artifacts, &ours.list, ours.fallback);
    let theirs_view = list_view(&engine.artifacts, &theirs, false);
    let (a, b) = if rng.random_bool(0.5) {
        (ours_view, theirs_view)
    } else {
        (theirs_view, ours_view)
    };
    let prompts: Vec<_> = FEEDBACK_PROMPTS
        .iter()
        .enumerate()
        .map(|(i, text)| json!({ "index": i, "text": text }))
        .collect();
    Ok(Json(json!({
        "pair": pair,
        "lists": [
            { "label": "A", "list": a },
            { "label": "B", "list": b },
        ],
        "prompts": prompts,
        "levels": LikertResponse::ALL,
    })))
}

#[derive(Default, Deserialize)]
struct FeedbackBody {
    pair: Option<usize>,
    prompt: Option<usize>,
    level: Option<String>,
}

async fn feedback(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    if !state.config.comparison_mode {
        return Err(ApiError::not_found("comparison mode is disabled"));
    }
    let body: FeedbackBody = parse_body(&body)?;
    let mut store = state.store();
    let session = store
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))?;
    if session.status != SessionStatus::Completed {
        return Err(ApiError::conflict("session is not completed"));
    }
    let pair = body.pair.unwrap_or(0);
    check_pair(pair)?;
    let prompt = body.prompt.ok_or_else(|| ApiError::bad_request("missing prompt"))?;
    if prompt >= FEEDBACK_PROMPTS.len() {
        return Err(ApiError::bad_request(format!("prompt {prompt} outside [0, 3)")));
    }
    let level = parse_level(body.level.as_deref().ok_or_else(|| ApiError::bad_request("missing level"))?)?;
    store.record(LogRecord::Feedback {
        session_id: id.clone(),
        pair,
        prompt,
        level,
        received_at: now_millis(),
    })?;
    Ok(Json(json!({ "session_id": id, "pair": pair, "prompt": prompt, "level": level })))
}
