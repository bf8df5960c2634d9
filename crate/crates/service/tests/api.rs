//! End-to-end HTTP tests against a small synthetic model.

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use coldstart_core::artifacts::{build_model, BuildConfig, ModelArtifacts};
use coldstart_core::synth::{generate, SynthConfig};
use coldstart_core::topics::TopicMethod;
use coldstart_service::{serve, AppState, Engine, ServiceConfig, SessionStore, FEEDBACK_PROMPTS};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};

const LEVELS: [&str; 7] = ["a-great", "a-moderate", "a-slight", "none", "b-slight", "b-moderate", "b-great"];

fn model_dir() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("service-model-{}", std::process::id()));
        let planted = generate(
            &SynthConfig {
                n_users: 120,
                n_articles: 160,
                n_terms: 400,
                articles_per_user: (10, 20),
                ..SynthConfig::default()
            },
            3,
        )
        .unwrap();
        let config = BuildConfig {
            method: TopicMethod::Content,
            latent_dims: 30,
            seed: 1,
            ..BuildConfig::default()
        };
        let out = build_model(&planted.corpus, Some(planted.views.clone()), &config).unwrap();
        out.artifacts.save(&dir).unwrap();
        dir
    })
}

struct Server {
    base: String,
    client: Client,
    handle: tokio::task::JoinHandle<()>,
}

impl Server {
    async fn start(config: ServiceConfig) -> Server {
        let state = Arc::new(AppState::open(config).unwrap());
        Self::start_with(state).await
    }

    async fn start_with(state: Arc<AppState>) -> Server {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let handle = tokio::spawn(async move {
            serve(listener, state).await.unwrap();
        });
        Server {
            base,
            client: Client::new(),
            handle,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    async fn get(&self, path: &str) -> (StatusCode, String) {
        let r = self.client.get(self.url(path)).send().await.unwrap();
        (r.status(), r.text().await.unwrap())
    }

    async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self.client.post(self.url(path)).json(&body).send().await.unwrap();
        let status = r.status();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    async fn new_session(&self) -> String {
        let (status, body) = self.post("/api/v1/sessions", json!({})).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }

    async fn answer(&self, id: &str, index: usize, level: &str) -> (StatusCode, Value) {
        self.post(
            &format!("/api/v1/sessions/{id}/responses"),
            json!({ "question_index": index, "level": level }),
        )
        .await
    }

    async fn answer_all(&self, id: &str, levels: impl Fn(usize) -> &'static str) {
        for i in 0..20 {
            let (status, body) = self.answer(id, i, levels(i)).await;
            assert_eq!(status, StatusCode::OK, "{body}");
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

fn config(log: &Path) -> ServiceConfig {
    ServiceConfig::new(Some(model_dir().to_path_buf()), log.to_path_buf())
}

fn varied(i: usize) -> &'static str {
    LEVELS[(i * 5 + 1) % 7]
}

#[tokio::test]
async fn questionnaire_is_served_verbatim() {
    let tmp = tempfile::tempdir().unwrap();
    let server = Server::start(config(&tmp.path().join("log.jsonl"))).await;
    let (status, first) = server.get("/api/v1/questionnaire").await;
    assert_eq!(status, StatusCode::OK);
    let (_, second) = server.get("/api/v1/questionnaire").await;
    assert_eq!(first, second);
    let doc: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(doc["questions"].as_array().unwrap().len(), 20);
    assert_eq!(doc["questions"][0]["list_a"].as_array().unwrap().len(), 20);
    let (status, health) = server.get("/healthz").await;
    assert_eq!(status, StatusCode::OK);
    assert!(health.contains("\"artifact\":true"));
}

#[tokio::test]
async fn missing_artifact_answers_unavailable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ServiceConfig::new(Some(tmp.path().join("nowhere")), tmp.path().join("log.jsonl"));
    let server = Server::start(cfg).await;
    assert_eq!(server.get("/api/v1/questionnaire").await.0, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(
        server.post("/api/v1/sessions", json!({})).await.0,
        StatusCode::SERVICE_UNAVAILABLE
    );
    assert_eq!(server.get("/healthz").await.0, StatusCode::OK);
}

#[tokio::test]
async fn session_lifecycle_and_error_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let server = Server::start(config(&tmp.path().join("log.jsonl"))).await;
    let id = server.new_session().await;
    assert_eq!(id.len(), 22);
    assert!(id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'));

    assert_eq!(server.answer("nope", 0, "none").await.0, StatusCode::NOT_FOUND);
    assert_eq!(server.answer(&id, 20, "none").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(server.answer(&id, 0, "very-much").await.0, StatusCode::BAD_REQUEST);
    let (status, _) = server
        .post(&format!("/api/v1/sessions/{id}/responses"), json!({ "level": "none" }))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    server.answer(&id, 3, "a-great").await;
    server.answer(&id, 3, "b-slight").await;
    let (_, view) = server.get(&format!("/api/v1/sessions/{id}")).await;
    let view: Value = serde_json::from_str(&view).unwrap();
    assert_eq!(view["responses"]["3"], "b-slight");
    assert_eq!(view["status"], "open");

    let complete = format!("/api/v1/sessions/{id}/complete");
    assert_eq!(server.post(&complete, json!({})).await.0, StatusCode::CONFLICT);
    let recs = format!("/api/v1/sessions/{id}/recommendations");
    assert_eq!(server.get(&recs).await.0, StatusCode::CONFLICT);

    server.answer_all(&id, varied).await;
    let (status, body) = server.post(&complete, json!({})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, again) = server.post(&complete, json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, again);
    assert_eq!(server.answer(&id, 0, "none").await.0, StatusCode::CONFLICT);

    let (status, list) = server.get(&format!("{recs}?k=5")).await;
    assert_eq!(status, StatusCode::OK);
    let list: Value = serde_json::from_str(&list).unwrap();
    assert_eq!(list["fallback"], false);
    assert_eq!(list["method"], "q-based");
    let items = list["items"].as_array().unwrap();
    assert_eq!(items.len(), 5);
    let ids: std::collections::HashSet<&str> = items.iter().map(|i| i["id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), 5);
    assert!(items.iter().all(|i| i["title"].is_string() && i["score"].is_number()));

    let (status, empty) = server.get(&format!("{recs}?k=0")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_str::<Value>(&empty).unwrap()["items"], json!([]));
    assert_eq!(server.get(&format!("{recs}?k=100000")).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn no_preference_everywhere_falls_back_to_views() {
    let tmp = tempfile::tempdir().unwrap();
    let server = Server::start(config(&tmp.path().join("log.jsonl"))).await;
    let id = server.new_session().await;
    server.answer_all(&id, |_| "none").await;
    server.post(&format!("/api/v1/sessions/{id}/complete"), json!({})).await;
    let (_, body) = server.get(&format!("/api/v1/sessions/{id}/recommendations")).await;
    let body: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body["fallback"], true);
    assert_eq!(body["method"], "view-pop");
    assert_eq!(body["items"].as_array().unwrap().len(), 5);
}

#[tokio::test]
async fn identical_sessions_get_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let server = Server::start(config(&tmp.path().join("log.jsonl"))).await;
    let mut bodies = Vec::new();
    for _ in 0..2 {
        let id = server.new_session().await;
        server.answer_all(&id, varied).await;
        server.post(&format!("/api/v1/sessions/{id}/complete"), json!({})).await;
        let (status, body) = server.get(&format!("/api/v1/sessions/{id}/recommendations?k=5")).await;
        assert_eq!(status, StatusCode::OK);
        assert!(!body.contains(&id));
        bodies.push(body);
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[tokio::test]
async fn acknowledged_responses_survive_a_restart() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("log.jsonl");
    let id;
    {
        let server = Server::start(config(&log)).await;
        id = server.new_session().await;
        for i in 0..7 {
            server.answer(&id, i, varied(i)).await;
        }
    }
    let server = Server::start(config(&log)).await;
    let (status, view) = server.get(&format!("/api/v1/sessions/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    let view: Value = serde_json::from_str(&view).unwrap();
    assert_eq!(view["answered"], 7);
    for i in 0..7 {
        assert_eq!(view["responses"][i.to_string()], varied(i));
    }
    // the session carries on where it stopped
    for i in 7..20 {
        server.answer(&id, i, varied(i)).await;
    }
    assert_eq!(
        server.post(&format!("/api/v1/sessions/{id}/complete"), json!({})).await.0,
        StatusCode::OK
    );
}

#[tokio::test]
async fn comparison_mode_pairs_lists_and_stores_feedback() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("log.jsonl");
    let plain = Server::start(config(&log)).await;
    let id = plain.new_session().await;
    plain.answer_all(&id, varied).await;
    plain.post(&format!("/api/v1/sessions/{id}/complete"), json!({})).await;
    assert_eq!(
        plain.get(&format!("/api/v1/sessions/{id}/comparison")).await.0,
        StatusCode::NOT_FOUND
    );
    drop(plain);

    let mut cfg = config(&log);
    cfg.comparison_mode = true;
    let server = Server::start(cfg).await;
    let (status, body) = server.get(&format!("/api/v1/sessions/{id}/comparison?pair=2")).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let body: Value = serde_json::from_str(&body).unwrap();
    let lists = body["lists"].as_array().unwrap();
    assert_eq!(lists.len(), 2);
    let methods: Vec<&str> = lists.iter().map(|l| l["list"]["method"].as_str().unwrap()).collect();
    assert!(methods.contains(&"q-based"));
    assert!(methods.iter().any(|m| *m == "edit-pop" || *m == "view-pop"));
    assert!(lists.iter().all(|l| l["list"]["items"].as_array().unwrap().len() == 5));
    let prompts: Vec<&str> = body["prompts"].as_array().unwrap().iter().map(|p| p["text"].as_str().unwrap()).collect();
    assert_eq!(prompts, FEEDBACK_PROMPTS.to_vec());
    assert_eq!(
        server.get(&format!("/api/v1/sessions/{id}/comparison?pair=6")).await.0,
        StatusCode::BAD_REQUEST
    );

    let fb = format!("/api/v1/sessions/{id}/feedback");
    assert_eq!(server.post(&fb, json!({"pair": 2, "prompt": 0, "level": "a-moderate"})).await.0, StatusCode::OK);
    assert_eq!(server.post(&fb, json!({"pair": 2, "prompt": 2, "level": "b-great"})).await.0, StatusCode::OK);
    assert_eq!(server.post(&fb, json!({"pair": 2, "prompt": 3, "level": "none"})).await.0, StatusCode::BAD_REQUEST);
    drop(server);

    let mut cfg = config(&log);
    cfg.comparison_mode = true;
    let server = Server::start(cfg).await;
    let (_, view) = server.get(&format!("/api/v1/sessions/{id}")).await;
    let view: Value = serde_json::from_str(&view).unwrap();
    assert_eq!(
        view["feedback"],
        json!([
            {"pair": 2, "prompt": 0, "level": "a-moderate"},
            {"pair": 2, "prompt": 2, "level": "b-great"},
        ])
    );
}

#[tokio::test]
async fn partial_completion_needs_the_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("log.jsonl");
    let mut cfg = config(&log);
    cfg.allow_partial = true;
    let server = Server::start(cfg).await;
    let id = server.new_session().await;
    server.answer(&id, 0, "a-great").await;
    let complete = format!("/api/v1/sessions/{id}/complete");
    assert_eq!(server.post(&complete, json!({})).await.0, StatusCode::CONFLICT);
    let (status, body) = server.post(&complete, json!({"allow_partial": true})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["partial"], true);
    let (_, view) = server.get(&format!("/api/v1/sessions/{id}")).await;
    let view: Value = serde_json::from_str(&view).unwrap();
    assert_eq!(view["answered"], 20);
    assert_eq!(view["responses"]["19"], "none");
    assert_eq!(view["responses"]["0"], "a-great");
    drop(server);

    let other = Server::start(config(&tmp.path().join("other.jsonl"))).await;
    let id = other.new_session().await;
    let (status, _) = other
        .post(&format!("/api/v1/sessions/{id}/complete"), json!({"allow_partial": true}))
        .await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn per_client_session_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(&tmp.path().join("log.jsonl"));
    cfg.max_sessions_per_client = 2;
    let server = Server::start(cfg).await;
    server.new_session().await;
    server.new_session().await;
    let (status, _) = server.post("/api/v1/sessions", json!({})).await;
    assert_eq!(status, StatusCode::TOO_MANY_REQUESTS);
}

#[tokio::test]
async fn state_can_be_built_from_parts() {
    let tmp = tempfile::tempdir().unwrap();
    let store = SessionStore::open(&tmp.path().join("log.jsonl")).unwrap();
    let engine = Engine::new(ModelArtifacts::load(model_dir()).unwrap());
    let state = Arc::new(AppState::with_engine(config(&tmp.path().join("unused")), Some(engine), store));
    let server = Server::start_with(state).await;
    let id = server.new_session().await;
    assert_eq!(server.get(&format!("/api/v1/sessions/{id}")).await.0, StatusCode::OK);
}
