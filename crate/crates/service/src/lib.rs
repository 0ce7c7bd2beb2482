//! Live saturation tracking over HTTP.
//!
//! A session is an append-only log of interviews (code ids, or just a count
//! of new codes). After every change the session's curve, landmarks,
//! capture-recapture series and stopping-rule statuses are recomputed from
//! the log with the `saturation` crate.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/api/sessions` | `{"name", "alpha"?}` |
//! | GET | `/api/sessions/{id}` | |
//! | POST | `/api/sessions/{id}/interviews` | `{"interview_id", "codes"? , "new_code_count"?}` |
//! | POST | `/api/sessions/{id}/undo` | |
//! | POST | `/api/sessions/{id}/whatif` | `{"pattern": [0,1,..], "methods"?: [..]}` |
//! | GET | `/api/sessions/{id}/export?format=csv\|json` | |

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

pub mod api;
pub mod log;
pub mod state;
pub mod store;

pub use log::{Elicited, Entry, LogRecord, SessionMeta};
pub use state::{SessionState, WhatIf};
pub use store::SessionStore;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown session {0}")]
    NotFound(String),
    #[error("interview id \"{0}\" already exists in this session")]
    DuplicateInterview(String),
    #[error("nothing to undo")]
    EmptyLog,
    #[error("{0}")]
    Invalid(String),
    #[error("session log line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Runs the HTTP service until the process is stopped.
pub async fn serve(addr: SocketAddr, data_dir: PathBuf) -> Result<(), StoreError> {
    let store = Arc::new(SessionStore::open(data_dir)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, api::router(store)).await?;
    Ok(())
}
