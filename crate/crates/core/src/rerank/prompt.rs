//! Prompt rendering. The prompt carries the query and, per candidate, only
//! its id, hierarchy path titles and task title.

use std::fmt::Write;

use crate::ata::{AtaId, TaskRecord};
use crate::index::SEPARATOR;

use super::RerankError;

pub const MAX_CANDIDATES: usize = 50;

pub const INSTRUCTION: &str = "Order the candidates from most to least relevant to the query. \
Reply with one JSON array of candidate index numbers, for example [3, 1, 2]. \
Write nothing else: no words, no code fences, no explanation.";

const HEADER: &str = "You rank aircraft maintenance tasks for a technician's search query.";
const QUERY_PREFIX: &str = "Query: ";
const LIST_HEADER: &str = "Candidates (index | ATA ID | hierarchy path | task title):";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptCandidate {
    /// 1-based.
    pub index: usize,
    pub task_id: AtaId,
    pub path: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RerankPrompt {
    pub query: String,
    pub candidates: Vec<PromptCandidate>,
    pub instruction: &'static str,
}

impl RerankPrompt {
    /// Layout:
    ///
    /// ```text
    /// <header>
    /// Query: "<query as a JSON string>"
    ///
    /// <list header>
    /// [1] <id> | <path titles joined by " → "> | <title>
    /// ...
    ///
    /// <instruction>
    /// ```
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        out.push_str(QUERY_PREFIX);
        out.push_str(&serde_json::to_string(&self.query).expect("strings serialize"));
        out.push_str("\n\n");
        out.push_str(LIST_HEADER);
        out.push('\n');
        for c in &self.candidates {
            let _ = writeln!(out, "[{}] {} | {} | {}", c.index, c.task_id, c.path, c.title);
        }
        out.push('\n');
        out.push_str(self.instruction);
        out.push('\n');
        out
    }
}

pub fn build_prompt(query: &str, candidates: &[&TaskRecord]) -> Result<RerankPrompt, RerankError> {
    if candidates.is_empty() {
        return Err(RerankError::NoCandidates);
    }
    if candidates.len() > MAX_CANDIDATES {
        return Err(RerankError::TooManyCandidates { got: candidates.len(), max: MAX_CANDIDATES });
    }
    let candidates = candidates
        .iter()
        .enumerate()
        .map(|(i, r)| PromptCandidate {
            index: i + 1,
            task_id: r.task_id,
            path: r
                .hierarchy_path
                .iter()
                .map(|e| one_line(&e.title))
                .collect::<Vec<_>>()
                .join(SEPARATOR),
            title: one_line(&r.title),
        })
        .collect();
    Ok(RerankPrompt {
        query: query.to_string(),
        candidates,
        instruction: INSTRUCTION,
    })
}

// Keeps one candidate per line even if a title somehow holds a line break.
fn one_line(s: &str) -> String {
    if s.contains(['\n', '\r']) {
        s.split(['\n', '\r']).filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" ")
    } else {
        s.to_string()
    }
}

/// Recovers the query from a rendered prompt. Used by scripted clients.
pub fn prompt_query(prompt: &str) -> Option<String> {
    let line = prompt.lines().find_map(|l| l.strip_prefix(QUERY_PREFIX))?;
    serde_json::from_str(line).ok()
}

/// Recovers `(index, task_id)` pairs from a rendered prompt.
pub fn prompt_candidates(prompt: &str) -> Vec<(usize, AtaId)> {
    prompt
        .lines()
        .filter_map(|l| {
            let rest = l.strip_prefix('[')?;
            let (index, rest) = rest.split_once("] ")?;
            let (id, _) = rest.split_once(" | ")?;
            Some((index.parse().ok()?, id.parse().ok()?))
        })
        .collect()
}
