use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::Duration;

use ataseek_core::index::{Embedder, LocalHashEmbedder, RemoteEmbedder, SearchIndex};
use ataseek_core::ingest::read_kb_file;
use ataseek_core::rerank::{HttpLlmClient, Reranker};

use crate::clock::{Clock, SystemClock};
use crate::config::ServiceConfig;
use crate::sessions::SessionStore;
use crate::ServiceError;

/// One immutable index generation. Requests clone the `Arc` once and use
/// nothing else, so a reload never mixes generations within a response.
#[derive(Debug)]
pub struct Snapshot {
    pub index: SearchIndex,
    pub version: u64,
}

pub struct AppState {
    snapshot: RwLock<Option<Arc<Snapshot>>>,
    next_version: AtomicU64,
    reranker: Option<Reranker>,
    sessions: Mutex<SessionStore>,
    clock: Arc<dyn Clock>,
    pub display_k: usize,
    pub rerank_depth: usize,
}

impl std::fmt::Debug for AppState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AppState")
            .field("snapshot", &self.current().map(|s| s.version))
            .field("reranker", &self.reranker.is_some())
            .field("display_k", &self.display_k)
            .field("rerank_depth", &self.rerank_depth)
            .finish()
    }
}

impl AppState {
    pub fn new(sessions: SessionStore, clock: Arc<dyn Clock>) -> Self {
        Self {
            snapshot: RwLock::new(None),
            next_version: AtomicU64::new(1),
            reranker: None,
            sessions: Mutex::new(sessions),
            clock,
            display_k: crate::config::DEFAULT_DISPLAY_K,
            rerank_depth: ataseek_core::index::DEFAULT_RERANK_DEPTH,
        }
    }

    pub fn with_reranker(mut self, reranker: Reranker) -> Self {
        self.reranker = Some(reranker);
        self
    }

    pub fn with_limits(mut self, display_k: usize, rerank_depth: usize) -> Self {
        self.display_k = display_k;
        self.rerank_depth = rerank_depth;
        self
    }

    /// Builds the state described by `config`, loading the knowledge base
    /// if a path is configured.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let sessions = match &config.session_log {
            Some(path) => SessionStore::open(path)?,
            None => SessionStore::in_memory(),
        };
        let mut state =
            Self::new(sessions, Arc::new(SystemClock)).with_limits(config.display_k, config.rerank_depth);
        if let Some(endpoint) = &config.llm_endpoint {
            let client = HttpLlmClient::new(endpoint, config.llm_timeout);
            state = state.with_reranker(Reranker::new(Arc::new(client)).with_timeout(config.llm_timeout));
        }
        if let Some(path) = &config.kb_path {
            state.install(load_index(path, config.embed_endpoint.as_deref())?);
        }
        Ok(state)
    }

    pub fn current(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }

    /// Atomically replaces the served index; returns the new version.
    pub fn install(&self, index: SearchIndex) -> u64 {
        let version = self.next_version.fetch_add(1, Ordering::SeqCst);
        let snapshot = Arc::new(Snapshot { index, version });
        *self.snapshot.write().expect("snapshot lock poisoned") = Some(snapshot);
        version
    }

    pub fn clear(&self) {
        *self.snapshot.write().expect("snapshot lock poisoned") = None;
    }

    pub fn reranker(&self) -> Option<&Reranker> {
        self.reranker.as_ref()
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    pub fn sessions(&self) -> MutexGuard<'_, SessionStore> {
        self.sessions.lock().expect("session lock poisoned")
    }
}

pub fn load_index(kb_path: &Path, embed_endpoint: Option<&str>) -> Result<SearchIndex, ServiceError> {
    let kb = read_kb_file(kb_path)?;
    let embedder: Arc<dyn Embedder> = match embed_endpoint {
        Some(url) => Arc::new(RemoteEmbedder::new(url, Duration::from_secs(30))),
        None => Arc::new(LocalHashEmbedder),
    };
    Ok(SearchIndex::build(kb, embedder)?)
}
