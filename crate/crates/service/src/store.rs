//! Sessions kept in memory and mirrored to an append-only JSON-lines log.
//!
//! Every mutation is written and fsynced before it is applied, so anything
//! the caller acknowledged is replayed on the next start.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use coldstart_core::questionnaire::LikertResponse;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Session {
        session_id: String,
        created_at: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client: Option<String>,
    },
    Response {
        session_id: String,
        question_index: usize,
        level: LikertResponse,
        received_at: u64,
    },
    Complete {
        session_id: String,
        completed_at: u64,
        partial: bool,
    },
    /// Answer to one comparison prompt for one list pairing.
    Feedback {
        session_id: String,
        pair: usize,
        prompt: usize,
        level: LikertResponse,
        received_at: u64,
    },
}

impl LogRecord {
    pub fn session_id(&self) -> &str {
        match self {
            LogRecord::Session { session_id, .. }
            | LogRecord::Response { session_id, .. }
            | LogRecord::Complete { session_id, .. }
            | LogRecord::Feedback { session_id, .. } => session_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Open,
    Completed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub created_at: u64,
    pub client: Option<String>,
    /// Latest level per question index.
    pub responses: BTreeMap<usize, LikertResponse>,
    pub status: SessionStatus,
    pub partial: bool,
    /// Latest level per (pair, prompt).
    pub feedback: BTreeMap<(usize, usize), LikertResponse>,
}

impl Session {
    fn new(id: String, created_at: u64, client: Option<String>) -> Self {
        Session {
            id,
            created_at,
            client,
            responses: BTreeMap::new(),
            status: SessionStatus::Open,
            partial: false,
            feedback: BTreeMap::new(),
        }
    }

    /// Responses in question order, or `None` if any of the first `k` is missing.
    pub fn ordered_responses(&self, k: usize) -> Option<Vec<LikertResponse>> {
        (0..k).map(|i| self.responses.get(&i).copied()).collect()
    }
}

pub fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub struct SessionStore {
    path: PathBuf,
    log: File,
    sessions: HashMap<String, Session>,
    per_client: HashMap<String, usize>,
}

impl SessionStore {
    /// Opens (or creates) the log and replays it. A torn final line from a
    /// crash mid-write is skipped with a warning.
    pub fn open(path: &Path) -> Result<Self, ServiceError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| ServiceError::io(dir, e))?;
        }
        let mut store = SessionStore {
            path: path.to_path_buf(),
            log: OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| ServiceError::io(path, e))?,
            sessions: HashMap::new(),
            per_client: HashMap::new(),
        };
        let reader = BufReader::new(File::open(path).map_err(|e| ServiceError::io(path, e))?);
        let mut replayed = 0;
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| ServiceError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<LogRecord>(&line) {
                Ok(rec) => {
                    store.apply(rec);
                    replayed += 1;
                }
                Err(e) => log::warn!("{}:{}: skipping unreadable record: {e}", path.display(), n + 1),
            }
        }
        log::info!(
            "replayed {replayed} records into {} sessions from {}",
            store.sessions.len(),
            path.display()
        );
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Session> {
        self.sessions.get(id)
    }

    pub fn sessions_for_client(&self, client: &str) -> usize {
        self.per_client.get(client).copied().unwrap_or(0)
    }

    /// Durably appends the record, then applies it.
    pub fn record(&mut self, rec: LogRecord) -> Result<(), ServiceError> {
        let mut line = serde_json::to_string(&rec).expect("log records serialize");
        line.push('\n');
        self.log
            .write_all(line.as_bytes())
            .and_then(|_| self.log.sync_data())
            .map_err(|e| ServiceError::io(&self.path, e))?;
        self.apply(rec);
        Ok(())
    }

    fn apply(&mut self, rec: LogRecord) {
        match rec {
            LogRecord::Session {
                session_id,
                created_at,
                client,
            } => {
                if let Some(c) = &client {
                    *self.per_client.entry(c.clone()).or_default() += 1;
                }
                self.sessions
                    .insert(session_id.clone(), Session::new(session_id, created_at, client));
            }
            LogRecord::Response {
                session_id,
                question_index,
                level,
                ..
            } => {
                if let Some(s) = self.sessions.get_mut(&session_id) {
                    s.responses.insert(question_index, level);
                }
            }
            LogRecord::Complete {
                session_id, partial, ..
            } => {
                if let Some(s) = self.sessions.get_mut(&session_id) {
                    s.status = SessionStatus::Completed;
                    s.partial = partial;
                }
            }
            LogRecord::Feedback {
                session_id,
                pair,
                prompt,
                level,
                ..
            } => {
                if let Some(s) = self.sessions.get_mut(&session_id) {
                    s.feedback.insert((pair, prompt), level);
                }
            }
        }
    }
}
