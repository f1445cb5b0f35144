use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ata::AtaId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CandidateSource {
    Lexical,
    Dense,
    Reranked,
    Fallback,
}

impl fmt::Display for CandidateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CandidateSource::Lexical => "Lexical",
            CandidateSource::Dense => "Dense",
            CandidateSource::Reranked => "Reranked",
            CandidateSource::Fallback => "Fallback",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub task_id: AtaId,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Ordered retrieval results. Ranks run 1..=len without gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateList {
    pub entries: Vec<Candidate>,
    pub source: CandidateSource,
}

impl CandidateList {
    /// Builds a list from already-ordered `(id, score)` pairs.
    pub fn from_ordered(source: CandidateSource, ordered: impl IntoIterator<Item = (AtaId, f64)>) -> Self {
        let entries = ordered
            .into_iter()
            .enumerate()
            .map(|(i, (task_id, score))| Candidate {
                task_id,
                score,
                rank: i + 1,
            })
            .collect();
        Self { entries, source }
    }

    pub fn empty(source: CandidateSource) -> Self {
        Self {
            entries: Vec::new(),
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<AtaId> {
        self.entries.iter().map(|c| c.task_id).collect()
    }

    pub fn rank_of(&self, id: &AtaId) -> Option<usize> {
        self.entries.iter().find(|c| c.task_id == *id).map(|c| c.rank)
    }

    /// First `k` entries, same source.
    pub fn truncated(&self, k: usize) -> Self {
        Self {
            entries: self.entries.iter().take(k).copied().collect(),
            source: self.source,
        }
    }

    /// Contiguous ranks, unique ids, and non-increasing scores for
    /// first-stage sources.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = HashSet::new();
        for (i, c) in self.entries.iter().enumerate() {
            if c.rank != i + 1 {
                return Err(format!("rank {} at position {}", c.rank, i + 1));
            }
            if !seen.insert(c.task_id) {
                return Err(format!("duplicate task {}", c.task_id));
            }
        }
        if matches!(self.source, CandidateSource::Lexical | CandidateSource::Dense)
            && self.entries.windows(2).any(|w| w[1].score > w[0].score)
        {
            return Err("scores increase".into());
        }
        Ok(())
    }
}
