//! First-stage retrieval: embedding texts, BM25 and exact dense search.

mod bm25;
mod candidates;
mod dense;
mod embed;
mod text;
mod tokenize;

use std::sync::Arc;

use thiserror::Error;

use crate::ata::{AtaId, KnowledgeBase};

pub use bm25::{Bm25Index, B as BM25_B, K1 as BM25_K1};
pub use candidates::{Candidate, CandidateList, CandidateSource};
pub use dense::DenseIndex;
pub use embed::{fnv1a64, EmbedError, Embedder, LocalHashEmbedder, RemoteEmbedder, Vector, LOCAL_DIMS};
pub use text::{build_embedding_text, EmbeddingText, SEPARATOR};
pub use tokenize::tokenize;

/// Candidate depth handed to the re-ranker.
pub const DEFAULT_RERANK_DEPTH: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("query has no searchable tokens")]
    EmptyQuery,
    #[error("dimension mismatch: index has {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Immutable retrieval snapshot over one knowledge base.
pub struct SearchIndex {
    kb: KnowledgeBase,
    texts: Vec<EmbeddingText>,
    bm25: Bm25Index,
    dense: DenseIndex,
    embedder: Arc<dyn Embedder>,
}

impl std::fmt::Debug for SearchIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SearchIndex")
            .field("tasks", &self.kb.len())
            .field("dims", &self.dense.dims())
            .finish()
    }
}

impl SearchIndex {
    pub fn build(kb: KnowledgeBase, embedder: Arc<dyn Embedder>) -> Result<Self, IndexError> {
        let texts: Vec<EmbeddingText> = kb.records().iter().map(build_embedding_text).collect();
        let bm25 = Bm25Index::build(&texts);
        let refs: Vec<&str> = texts.iter().map(|t| t.text.as_str()).collect();
        let vectors = if refs.is_empty() { Vec::new() } else { embedder.embed(&refs)? };
        if vectors.len() != texts.len() {
            return Err(EmbedError::BadResponse(format!("{} vectors for {} texts", vectors.len(), texts.len())).into());
        }
        let dense = DenseIndex::build(texts.iter().map(|t| t.task_id).zip(vectors).collect())?;
        Ok(Self {
            kb,
            texts,
            bm25,
            dense,
            embedder,
        })
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn texts(&self) -> &[EmbeddingText] {
        &self.texts
    }

    pub fn dense_index(&self) -> &DenseIndex {
        &self.dense
    }

    pub fn bm25_index(&self) -> &Bm25Index {
        &self.bm25
    }

    pub fn embedding_text(&self, id: &AtaId) -> Option<&EmbeddingText> {
        self.kb.index_of(id).map(|i| &self.texts[i])
    }

    pub fn bm25_search(&self, query: &str, n: usize) -> Result<CandidateList, IndexError> {
        self.bm25.search(query, n)
    }

    pub fn embed_query(&self, query: &str) -> Result<Vector, IndexError> {
        let lowered = query.trim().to_lowercase();
        if lowered.is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        Ok(self.embedder.embed_one(&lowered)?)
    }

    pub fn dense_search(&self, query_vector: &Vector, n: usize) -> Result<CandidateList, IndexError> {
        self.dense.search(query_vector, n)
    }

    /// Embeds the lowercased query and searches the dense index.
    pub fn dense_search_text(&self, query: &str, n: usize) -> Result<CandidateList, IndexError> {
        let v = self.embed_query(query)?;
        self.dense.search(&v, n)
    }
}
