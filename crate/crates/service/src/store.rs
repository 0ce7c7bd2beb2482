//! File-backed session store. Each session is one `<id>.jsonl` log in the
//! data directory; the in-memory copy is rebuilt from the logs on open.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use saturation::ProjectionMethod;

use crate::log::{self, Elicited, Entry, LogRecord, SessionMeta};
use crate::state::{self, SessionState, WhatIf};
use crate::StoreError;

struct Session {
    meta: SessionMeta,
    entries: Vec<Entry>,
    path: PathBuf,
}

impl Session {
    fn append(&mut self, record: &LogRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(record).expect("log records serialize");
        line.push('\n');
        let mut file = OpenOptions::new().append(true).open(&self.path)?;
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(())
    }
}

type Handle = Arc<tokio::sync::RwLock<Session>>;

/// Sessions keyed by id. Writers to one session are serialized by its lock;
/// distinct sessions never contend beyond the brief map lookup.
pub struct SessionStore {
    dir: PathBuf,
    sessions: RwLock<HashMap<String, Handle>>,
}

impl SessionStore {
    /// Opens `dir`, creating it if needed, and replays every session log.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        for item in fs::read_dir(&dir)? {
            let path = item?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let (meta, entries) = log::replay(&fs::read_to_string(&path)?)?;
            sessions.insert(
                meta.session_id.clone(),
                Arc::new(tokio::sync::RwLock::new(Session {
                    meta,
                    entries,
                    path,
                })),
            );
        }
        tracing::info!(count = sessions.len(), dir = %dir.display(), "sessions loaded");
        Ok(Self {
            dir,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log_path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.jsonl"))
    }

    fn handle(&self, session_id: &str) -> Result<Handle, StoreError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(session_id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(session_id.to_owned()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .expect("session map lock")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    pub async fn create(&self, name: &str, alpha: f64) -> Result<SessionState, StoreError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(StoreError::Invalid(format!(
                "alpha must lie strictly between 0 and 1, got {alpha}"
            )));
        }
        let meta = SessionMeta {
            session_id: uuid::Uuid::new_v4().simple().to_string(),
            name: name.to_owned(),
            alpha,
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        let path = self.log_path(&meta.session_id);
        File::create_new(&path)?;
        let mut session = Session {
            meta: meta.clone(),
            entries: Vec::new(),
            path,
        };
        session.append(&LogRecord::Created(meta.clone()))?;
        let state = state::derive(&session.meta, &session.entries)?;
        self.sessions
            .write()
            .expect("session map lock")
            .insert(meta.session_id, Arc::new(tokio::sync::RwLock::new(session)));
        Ok(state)
    }

    pub async fn get(&self, session_id: &str) -> Result<SessionState, StoreError> {
        let handle = self.handle(session_id)?;
        let session = handle.read().await;
        state::derive(&session.meta, &session.entries)
    }

    pub async fn append(&self, session_id: &str, entry: Entry) -> Result<SessionState, StoreError> {
        validate(&entry)?;
        let handle = self.handle(session_id)?;
        let mut session = handle.write().await;
        if session
            .entries
            .iter()
            .any(|e| e.interview_id == entry.interview_id)
        {
            return Err(StoreError::DuplicateInterview(entry.interview_id));
        }
        let mut entries = session.entries.clone();
        entries.push(entry.clone());
        // derive first so a rejected entry never reaches the log
        let state = state::derive(&session.meta, &entries)?;
        session.append(&LogRecord::Interview(entry))?;
        session.entries = entries;
        Ok(state)
    }

    pub async fn undo(&self, session_id: &str) -> Result<SessionState, StoreError> {
        let handle = self.handle(session_id)?;
        let mut session = handle.write().await;
        if session.entries.is_empty() {
            return Err(StoreError::EmptyLog);
        }
        session.append(&LogRecord::Undo)?;
        session.entries.pop();
        state::derive(&session.meta, &session.entries)
    }

    pub async fn what_if(
        &self,
        session_id: &str,
        pattern: &[bool],
        methods: &[ProjectionMethod],
    ) -> Result<WhatIf, StoreError> {
        let handle = self.handle(session_id)?;
        let session = handle.read().await;
        state::what_if(&session.meta, &session.entries, pattern, methods)
    }

    pub async fn export_csv(&self, session_id: &str) -> Result<String, StoreError> {
        let handle = self.handle(session_id)?;
        let session = handle.read().await;
        state::wide_csv(&session.entries)
    }
}

fn validate(entry: &Entry) -> Result<(), StoreError> {
    if entry.interview_id.trim().is_empty() {
        return Err(StoreError::Invalid("interview_id must not be empty".into()));
    }
    if let Elicited::Codes { codes } = &entry.elicited {
        let mut seen = HashSet::new();
        for code in codes {
            if code.trim().is_empty() {
                return Err(StoreError::Invalid("code ids must not be empty".into()));
            }
            if code.starts_with("auto:") {
                return Err(StoreError::Invalid(format!(
                    "code \"{code}\" uses the reserved auto: prefix"
                )));
            }
            if !seen.insert(code) {
                return Err(StoreError::Invalid(format!("code \"{code}\" listed twice")));
            }
        }
    }
    Ok(())
}
