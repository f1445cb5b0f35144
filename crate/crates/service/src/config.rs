use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use ataseek_core::index::DEFAULT_RERANK_DEPTH;
use ataseek_core::rerank::{DEFAULT_TIMEOUT, MAX_CANDIDATES};

use crate::ServiceError;

pub const DEFAULT_DISPLAY_K: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub kb_path: Option<PathBuf>,
    pub embed_endpoint: Option<String>,
    pub llm_endpoint: Option<String>,
    pub display_k: usize,
    pub rerank_depth: usize,
    pub llm_timeout: Duration,
    pub session_log: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub bind: SocketAddr,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            kb_path: None,
            embed_endpoint: None,
            llm_endpoint: None,
            display_k: DEFAULT_DISPLAY_K,
            rerank_depth: DEFAULT_RERANK_DEPTH,
            llm_timeout: DEFAULT_TIMEOUT,
            session_log: None,
            static_dir: None,
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
        }
    }
}

impl ServiceConfig {
    /// Reads KB_PATH, EMBED_ENDPOINT, LLM_ENDPOINT, LLM_TIMEOUT_MS,
    /// DISPLAY_K, RERANK_DEPTH, SESSION_LOG, STATIC_DIR and BIND_ADDR.
    pub fn from_env() -> Result<Self, ServiceError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ServiceError> {
        let get = |k: &str| get(k).filter(|v| !v.trim().is_empty());
        let number = |k: &str| -> Result<Option<u64>, ServiceError> {
            get(k)
                .map(|v| v.trim().parse::<u64>().map_err(|_| ServiceError::Config(format!("{k}={v:?} is not a number"))))
                .transpose()
        };
        let d = Self::default();
        let config = Self {
            kb_path: get("KB_PATH").map(PathBuf::from),
            embed_endpoint: get("EMBED_ENDPOINT"),
            llm_endpoint: get("LLM_ENDPOINT"),
            display_k: number("DISPLAY_K")?.map_or(d.display_k, |v| v as usize),
            rerank_depth: number("RERANK_DEPTH")?.map_or(d.rerank_depth, |v| v as usize),
            llm_timeout: number("LLM_TIMEOUT_MS")?.map_or(d.llm_timeout, Duration::from_millis),
            session_log: get("SESSION_LOG").map(PathBuf::from),
            static_dir: get("STATIC_DIR").map(PathBuf::from),
            bind: match get("BIND_ADDR") {
                Some(v) => v.parse().map_err(|_| ServiceError::Config(format!("BIND_ADDR={v:?} is not host:port")))?,
                None => d.bind,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if !(1..=MAX_CANDIDATES).contains(&self.display_k) {
            return Err(ServiceError::Config(format!("DISPLAY_K must be in 1..={MAX_CANDIDATES}")));
        }
        if !(1..=MAX_CANDIDATES).contains(&self.rerank_depth) {
            return Err(ServiceError::Config(format!("RERANK_DEPTH must be in 1..={MAX_CANDIDATES}")));
        }
        Ok(())
    }
}
