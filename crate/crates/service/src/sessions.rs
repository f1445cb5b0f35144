//! Search sessions and their append-only JSONL log.
//!
//! Each line is one event: a search (session opened) or an outcome
//! (session closed). Replaying the log rebuilds the session table.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use ataseek_core::ata::AtaId;
use ataseek_core::eval::Language;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub selected_task: Option<AtaId>,
    pub success: bool,
    pub verified_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSession {
    pub session_id: String,
    pub query_text: String,
    pub language: Language,
    pub submitted_at: u64,
    pub results_shown: Vec<AtaId>,
    pub outcome: Option<Outcome>,
}

impl SearchSession {
    pub fn tct_ms(&self) -> Option<u64> {
        self.outcome.as_ref().map(|o| o.verified_at - self.submitted_at)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Search {
        session_id: String,
        query_text: String,
        language: Language,
        submitted_at: u64,
        results_shown: Vec<AtaId>,
    },
    Outcome {
        session_id: String,
        #[serde(flatten)]
        outcome: Outcome,
    },
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("outcome already recorded for session {0}")]
    AlreadyRecorded(String),
    #[error("verification at {verified_at} precedes submission at {submitted_at}")]
    BeforeSubmission { submitted_at: u64, verified_at: u64 },
    #[error("session log {path}: {reason}")]
    Log { path: PathBuf, reason: String },
}

/// Session table plus its optional log file. Callers hold it behind one
/// mutex, which makes the log single-writer.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: HashMap<String, SearchSession>,
    log: Option<(PathBuf, File)>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) and replays the log at `path`.
    pub fn open(path: &Path) -> Result<Self, SessionError> {
        let log_err = |reason: String| SessionError::Log { path: path.to_path_buf(), reason };
        let mut sessions: HashMap<String, SearchSession> = HashMap::new();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(log_err(e.to_string())),
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Event>(line) {
                Ok(event) => apply(&mut sessions, event),
                // a torn final write is survivable; keep going
                Err(e) => tracing::warn!(line = i + 1, error = %e, "skipping unreadable session log line"),
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| log_err(e.to_string()))?;
        if !text.is_empty() && !text.ends_with('\n') {
            file.write_all(b"\n").map_err(|e| log_err(e.to_string()))?;
        }
        Ok(Self { sessions, log: Some((path.to_path_buf(), file)) })
    }

    pub fn get(&self, id: &str) -> Option<&SearchSession> {
        self.sessions.get(id)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn open_session(&mut self, session: SearchSession) -> Result<(), SessionError> {
        self.append(&Event::Search {
            session_id: session.session_id.clone(),
            query_text: session.query_text.clone(),
            language: session.language,
            submitted_at: session.submitted_at,
            results_shown: session.results_shown.clone(),
        })?;
        self.sessions.insert(session.session_id.clone(), session);
        Ok(())
    }

    pub fn record_outcome(&mut self, id: &str, outcome: Outcome) -> Result<SearchSession, SessionError> {
        let session = self.sessions.get(id).ok_or_else(|| SessionError::UnknownSession(id.to_string()))?;
        if session.outcome.is_some() {
            return Err(SessionError::AlreadyRecorded(id.to_string()));
        }
        if outcome.verified_at < session.submitted_at {
            return Err(SessionError::BeforeSubmission {
                submitted_at: session.submitted_at,
                verified_at: outcome.verified_at,
            });
        }
        self.append(&Event::Outcome { session_id: id.to_string(), outcome: outcome.clone() })?;
        let session = self.sessions.get_mut(id).expect("checked above");
        session.outcome = Some(outcome);
        Ok(session.clone())
    }

    fn append(&mut self, event: &Event) -> Result<(), SessionError> {
        let Some((path, file)) = &mut self.log else { return Ok(()) };
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| SessionError::Log { path: path.clone(), reason: e.to_string() })
    }
}

fn apply(sessions: &mut HashMap<String, SearchSession>, event: Event) {
    match event {
        Event::Search { session_id, query_text, language, submitted_at, results_shown } => {
            sessions.insert(
                session_id.clone(),
                SearchSession { session_id, query_text, language, submitted_at, results_shown, outcome: None },
            );
        }
        Event::Outcome { session_id, outcome } => {
            if let Some(s) = sessions.get_mut(&session_id) {
                if s.outcome.is_none() {
                    s.outcome = Some(outcome);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(id: &str, at: u64) -> SearchSession {
        SearchSession {
            session_id: id.into(),
            query_text: "brake".into(),
            language: Language::En,
            submitted_at: at,
            results_shown: vec![],
            outcome: None,
        }
    }

    #[test]
    fn outcome_rules() {
        let mut store = SessionStore::in_memory();
        store.open_session(session("s1", 1000)).unwrap();
        let early = Outcome { selected_task: None, success: false, verified_at: 999 };
        assert!(matches!(store.record_outcome("s1", early), Err(SessionError::BeforeSubmission { .. })));
        let ok = Outcome { selected_task: None, success: true, verified_at: 19_000 };
        assert_eq!(store.record_outcome("s1", ok.clone()).unwrap().tct_ms(), Some(18_000));
        assert!(matches!(store.record_outcome("s1", ok.clone()), Err(SessionError::AlreadyRecorded(_))));
        assert!(matches!(store.record_outcome("nope", ok), Err(SessionError::UnknownSession(_))));
    }

    #[test]
    fn log_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sessions.jsonl");
        {
            let mut store = SessionStore::open(&path).unwrap();
            store.open_session(session("a", 10)).unwrap();
            store.open_session(session("b", 20)).unwrap();
            store
                .record_outcome("a", Outcome { selected_task: None, success: true, verified_at: 50 })
                .unwrap();
        }
        // simulate a torn trailing write
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"event\":\"outc").unwrap();
        drop(f);
        let mut store = SessionStore::open(&path).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.get("a").unwrap().tct_ms(), Some(40));
        assert!(store.get("b").unwrap().outcome.is_none());
        store
            .record_outcome("b", Outcome { selected_task: None, success: false, verified_at: 70 })
            .unwrap();
        drop(store);
        // the append after the torn line is still readable
        assert_eq!(SessionStore::open(&path).unwrap().get("b").unwrap().tct_ms(), Some(50));
    }
}
