//! On-disk session log: one JSON object per line, append-only.
//!
//! The first record creates the session; later records append an interview
//! or undo the most recent one. State is always rebuilt by replaying the log.

use serde::{Deserialize, Serialize};

use crate::StoreError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub name: String,
    pub alpha: f64,
    pub created: String,
}

/// What was entered for one interview.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Elicited {
    Codes {
        codes: Vec<String>,
    },
    /// Only the number of new codes is known; ids are generated.
    Count {
        new_code_count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub interview_id: String,
    #[serde(flatten)]
    pub elicited: Elicited,
}

impl Entry {
    /// Code ids for this interview; count-only entries get fresh ids that
    /// cannot collide with other interviews.
    pub fn code_ids(&self) -> Vec<String> {
        match &self.elicited {
            Elicited::Codes { codes } => codes.clone(),
            Elicited::Count { new_code_count } => (1..=*new_code_count)
                .map(|i| format!("auto:{}:{i}", self.interview_id))
                .collect(),
        }
    }

    pub fn is_count_only(&self) -> bool {
        matches!(self.elicited, Elicited::Count { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Created(SessionMeta),
    Interview(Entry),
    Undo,
}

/// Replays a log into session metadata and the surviving entries.
pub fn replay(text: &str) -> Result<(SessionMeta, Vec<Entry>), StoreError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let corrupt = |line: usize, message: String| StoreError::CorruptLog { line, message };

    let meta = match lines.next() {
        Some((i, l)) => match serde_json::from_str(l).map_err(|e| corrupt(i + 1, e.to_string()))? {
            LogRecord::Created(meta) => meta,
            _ => {
                return Err(corrupt(
                    i + 1,
                    "log must start with a created record".into(),
                ))
            }
        },
        None => return Err(corrupt(0, "empty log".into())),
    };
    let mut entries = Vec::new();
    for (i, l) in lines {
        match serde_json::from_str(l).map_err(|e| corrupt(i + 1, e.to_string()))? {
            LogRecord::Created(_) => return Err(corrupt(i + 1, "duplicate created record".into())),
            LogRecord::Interview(entry) => entries.push(entry),
            LogRecord::Undo => {
                entries
                    .pop()
                    .ok_or_else(|| corrupt(i + 1, "undo with no interviews".into()))?;
            }
        }
    }
    Ok((meta, entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_shapes() {
        let rec = LogRecord::Interview(Entry {
            interview_id: "i1".into(),
            elicited: Elicited::Codes {
                codes: vec!["A".into()],
            },
        });
        assert_eq!(
            serde_json::to_string(&rec).unwrap(),
            r#"{"type":"interview","interview_id":"i1","codes":["A"]}"#
        );
        let rec: LogRecord =
            serde_json::from_str(r#"{"type":"interview","interview_id":"i2","new_code_count":2}"#)
                .unwrap();
        match rec {
            LogRecord::Interview(e) => assert_eq!(e.code_ids(), vec!["auto:i2:1", "auto:i2:2"]),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            serde_json::to_string(&LogRecord::Undo).unwrap(),
            r#"{"type":"undo"}"#
        );
    }

    #[test]
    fn replay_applies_undo() {
        let log = r#"{"type":"created","session_id":"s","name":"n","alpha":0.05,"created":"t"}
{"type":"interview","interview_id":"a","codes":["A"]}
{"type":"interview","interview_id":"b","codes":[]}
{"type":"undo"}
"#;
        let (meta, entries) = replay(log).unwrap();
        assert_eq!(meta.name, "n");
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].interview_id, "a");
    }

    #[test]
    fn replay_rejects_bad_logs() {
        assert!(replay("").is_err());
        assert!(replay(r#"{"type":"undo"}"#).is_err());
        let log = r#"{"type":"created","session_id":"s","name":"n","alpha":0.05,"created":"t"}
{"type":"undo"}"#;
        assert!(matches!(
            replay(log),
            Err(StoreError::CorruptLog { line: 2, .. })
        ));
    }
}
