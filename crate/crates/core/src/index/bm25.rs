//! Okapi BM25 over embedding texts.
//!
//! score(D, Q) = Σ_{q ∈ Q} idf(q) · tf·(k1 + 1) / (tf + k1·(1 − b + b·|D|/avgdl))
//! idf(q) = ln(1 + (N − df + 0.5) / (df + 0.5))
//!
//! Query tokens are summed in order, repeats included.

use std::collections::HashMap;

use super::{tokenize, CandidateList, CandidateSource, EmbeddingText, IndexError};
use crate::ata::AtaId;

pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct Bm25Index {
    /// Document ids in ascending order; postings refer to positions here.
    ids: Vec<AtaId>,
    doc_lengths: Vec<u32>,
    postings: HashMap<String, Vec<(u32, u32)>>,
    avgdl: f64,
}

impl Bm25Index {
    pub fn build(texts: &[EmbeddingText]) -> Self {
        let mut docs: Vec<&EmbeddingText> = texts.iter().collect();
        docs.sort_by_key(|t| t.task_id);
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (doc, text) in docs.iter().enumerate() {
            let tokens = tokenize(&text.text);
            doc_lengths.push(tokens.len() as u32);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push((doc as u32, count));
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avgdl = if docs.is_empty() { 0.0 } else { total as f64 / docs.len() as f64 };
        Self {
            ids: docs.iter().map(|t| t.task_id).collect(),
            doc_lengths,
            postings,
            avgdl,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Top-`n` documents with a positive score; ties by id ascending.
    pub fn search(&self, query: &str, n: usize) -> Result<CandidateList, IndexError> {
        let terms = tokenize(query);
        if terms.is_empty() {
            return Err(IndexError::EmptyQuery);
        }
        let n_docs = self.ids.len() as f64;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let df = list.len() as f64;
            let idf = (1.0 + (n_docs - df + 0.5) / (df + 0.5)).ln();
            for &(doc, tf) in list {
                let tf = tf as f64;
                let dl = self.doc_lengths[doc as usize] as f64;
                let norm = tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * dl / self.avgdl));
                *scores.entry(doc).or_insert(0.0) += idf * norm;
            }
        }
        let mut ranked: Vec<(u32, f64)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(n);
        Ok(CandidateList::from_ordered(
            CandidateSource::Lexical,
            ranked.into_iter().map(|(doc, s)| (self.ids[doc as usize], s)),
        ))
    }
}
