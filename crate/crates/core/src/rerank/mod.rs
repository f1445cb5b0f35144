//! LLM re-ranking of dense candidates with a fail-safe fallback.
//!
//! The model sees only ids, hierarchy titles and task titles, and may only
//! answer with an index array. Any failure (unusable text, timeout,
//! transport error, a candidate missing from the knowledge base) yields the
//! dense ordering unchanged, tagged [`CandidateSource::Fallback`].

mod client;
pub mod mock;
mod parse;
mod prompt;

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ata::{KnowledgeBase, TaskRecord};
use crate::index::{CandidateList, CandidateSource};

pub use client::{HttpLlmClient, LlmClient, LlmError};
pub use parse::{parse_response, FallbackSignal};
pub use prompt::{
    build_prompt, prompt_candidates, prompt_query, PromptCandidate, RerankPrompt, INSTRUCTION, MAX_CANDIDATES,
};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_MAX_TOKENS: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RerankError {
    #[error("no candidates to re-rank")]
    NoCandidates,
    #[error("{got} candidates exceed the prompt limit of {max}")]
    TooManyCandidates { got: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RerankStatus {
    Reranked,
    FellBack,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerankOutcome {
    /// 1-based indices into the dense list as returned by the model, after
    /// filtering. Empty when falling back.
    pub order: Vec<usize>,
    pub status: RerankStatus,
    pub failure_reason: Option<String>,
}

impl RerankOutcome {
    fn fell_back(reason: impl Into<String>) -> Self {
        Self {
            order: Vec::new(),
            status: RerankStatus::FellBack,
            failure_reason: Some(reason.into()),
        }
    }
}

#[derive(Clone)]
pub struct Reranker {
    client: Arc<dyn LlmClient>,
    timeout: Duration,
    max_tokens: u32,
}

impl std::fmt::Debug for Reranker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Reranker")
            .field("timeout", &self.timeout)
            .field("max_tokens", &self.max_tokens)
            .finish()
    }
}

impl Reranker {
    pub fn new(client: Arc<dyn LlmClient>) -> Self {
        Self {
            client,
            timeout: DEFAULT_TIMEOUT,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn rerank(&self, query: &str, dense: &CandidateList, kb: &KnowledgeBase) -> CandidateList {
        self.rerank_with_outcome(query, dense, kb).0
    }

    pub fn rerank_with_outcome(
        &self,
        query: &str,
        dense: &CandidateList,
        kb: &KnowledgeBase,
    ) -> (CandidateList, RerankOutcome) {
        match self.try_rerank(query, dense, kb) {
            Ok(order) => (apply_order(dense, &order), RerankOutcome {
                order,
                status: RerankStatus::Reranked,
                failure_reason: None,
            }),
            Err(reason) => (fallback(dense), RerankOutcome::fell_back(reason)),
        }
    }

    fn try_rerank(&self, query: &str, dense: &CandidateList, kb: &KnowledgeBase) -> Result<Vec<usize>, String> {
        let records: Vec<&TaskRecord> = dense
            .entries
            .iter()
            .map(|c| kb.get(&c.task_id).ok_or_else(|| format!("candidate {} not in knowledge base", c.task_id)))
            .collect::<Result<_, _>>()?;
        let prompt = build_prompt(query, &records).map_err(|e| e.to_string())?.render();
        let text = self.complete_with_deadline(prompt).map_err(|e| e.to_string())?;
        parse_response(&text, dense.len()).map_err(|f| f.reason)
    }

    // The client runs on its own thread so a hung backend cannot hold the
    // caller past the deadline. A late reply is discarded.
    fn complete_with_deadline(&self, prompt: String) -> Result<String, LlmError> {
        let (tx, rx) = mpsc::sync_channel(1);
        let client = self.client.clone();
        let max_tokens = self.max_tokens;
        thread::Builder::new()
            .name("rerank-llm".into())
            .spawn(move || {
                let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                    client.complete(&prompt, max_tokens)
                }))
                .unwrap_or_else(|_| Err(LlmError::Transport("client panicked".into())));
                let _ = tx.send(result);
            })
            .map_err(|e| LlmError::Transport(format!("cannot spawn client thread: {e}")))?;
        match rx.recv_timeout(self.timeout) {
            Ok(result) => result,
            Err(mpsc::RecvTimeoutError::Timeout) => Err(LlmError::Timeout),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(LlmError::Transport("client thread vanished".into())),
        }
    }
}

/// Dense ordering, untouched, tagged as a fallback.
pub fn fallback(dense: &CandidateList) -> CandidateList {
    CandidateList {
        entries: dense.entries.clone(),
        source: CandidateSource::Fallback,
    }
}

/// Returned indices first, then every unmentioned candidate in dense
/// order. Scores carry over from the dense list; ranks are reassigned.
fn apply_order(dense: &CandidateList, order: &[usize]) -> CandidateList {
    let mut used = vec![false; dense.len()];
    let mut picked = Vec::with_capacity(dense.len());
    for &i in order {
        used[i - 1] = true;
        picked.push(&dense.entries[i - 1]);
    }
    picked.extend(dense.entries.iter().zip(&used).filter(|(_, u)| !**u).map(|(c, _)| c));
    CandidateList::from_ordered(CandidateSource::Reranked, picked.into_iter().map(|c| (c.task_id, c.score)))
}
