//! Extraction quality: token precision/recall/F1 and character error rate.
//!
//! Tokens are whitespace-delimited, case-sensitive, punctuation attached.
//! CER is computed on whitespace-normalized text.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{normalize_text, IngestError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub cer: f64,
}

/// Character-level edit distance with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

fn token_counts(text: &str) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for tok in text.split_whitespace() {
        *counts.entry(tok).or_insert(0) += 1;
    }
    counts
}

pub fn score_extraction(reference: &str, hypothesis: &str) -> Result<ExtractionScore, IngestError> {
    let reference_norm = normalize_text(reference);
    if reference_norm.is_empty() {
        return Err(IngestError::EmptyReference);
    }
    let hypothesis_norm = normalize_text(hypothesis);

    let ref_counts = token_counts(reference);
    let hyp_counts = token_counts(hypothesis);
    let ref_total: usize = ref_counts.values().sum();
    let hyp_total: usize = hyp_counts.values().sum();
    let matched: usize = hyp_counts
        .iter()
        .map(|(tok, &n)| n.min(ref_counts.get(tok).copied().unwrap_or(0)))
        .sum();

    let precision = if hyp_total == 0 { 0.0 } else { matched as f64 / hyp_total as f64 };
    let recall = matched as f64 / ref_total as f64;
    let f1 = if precision > 0.0 && recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let cer = levenshtein(&reference_norm, &hypothesis_norm) as f64 / reference_norm.chars().count() as f64;
    Ok(ExtractionScore {
        precision,
        recall,
        f1,
        cer,
    })
}
