//! Offline manual-to-knowledge conversion.
//!
//! Input is plain page text from an external extraction stage. Pages are
//! structured independently with configurable line rules, then assembled
//! into [`TaskRecord`](crate::ata::TaskRecord)s and persisted as JSONL.

mod assemble;
mod normalize;
mod score;
mod store;
mod structure;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ata::{AtaError, AtaId};

pub use assemble::{assemble, IngestOutput};
pub use normalize::{normalize_line, normalize_text};
pub use score::{levenshtein, score_extraction, ExtractionScore};
pub use store::{read_kb, read_kb_file, write_kb, write_kb_file};
pub use structure::{
    structure_page, CompiledRules, GroupContext, RulePatterns, StructuredPage, StructuringRules,
    TaskSkeleton,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line_number} of page {doc_id}:{page_number} matches several rules ({rules:?}): {line:?}")]
    AmbiguousHeader {
        doc_id: String,
        page_number: u32,
        line_number: usize,
        line: String,
        rules: Vec<&'static str>,
    },
    #[error("invalid structuring rule {rule}: {reason}")]
    InvalidRule { rule: &'static str, reason: String },
    #[error("reference text is empty")]
    EmptyReference,
    #[error("schema violation at line {line}: {reason}")]
    SchemaViolation { line: usize, reason: String },
    #[error("bad page file {path}: {reason}")]
    BadPageFile { path: String, reason: String },
    #[error(transparent)]
    Ata(#[from] AtaError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One page of extracted text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedPage {
    pub doc_id: String,
    pub page_number: u32,
    pub lines: Vec<String>,
}

/// Non-fatal ingest findings. These form the post-editing work queue and are
/// written out as records rather than logged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngestWarning {
    EmptyPage { doc_id: String, page_number: u32 },
    NoTaskHeaderFound { doc_id: String, page_number: u32 },
    UnassignedLines { doc_id: String, page_number: u32, lines: Vec<String> },
    MissingHierarchy { doc_id: String, page_number: u32, task_id: AtaId },
    DuplicateTask { doc_id: String, page_number: u32, task_id: AtaId },
}

/// Structures every page (in parallel) and assembles the records.
pub fn ingest_pages(pages: &[ExtractedPage], rules: &CompiledRules) -> Result<IngestOutput, IngestError> {
    let structured = pages
        .par_iter()
        .map(|p| structure_page(p, rules))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(structured, rules)
}

/// Loads page files named `<doc_id>.p<page>.txt` from `dir`.
pub fn read_page_dir(dir: &Path) -> Result<Vec<ExtractedPage>, IngestError> {
    let mut pages = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let bad = |reason: &str| IngestError::BadPageFile {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| bad("non-UTF-8 file name"))?;
        let (doc_id, page) = stem
            .rsplit_once(".p")
            .ok_or_else(|| bad("expected <doc_id>.p<page>.txt"))?;
        let page_number: u32 = page.parse().map_err(|_| bad("page number is not an integer"))?;
        if page_number == 0 || doc_id.is_empty() {
            return Err(bad("page numbers start at 1 and doc_id must be non-empty"));
        }
        let text = std::fs::read_to_string(&path)?;
        pages.push(ExtractedPage {
            doc_id: doc_id.to_string(),
            page_number,
            lines: text.lines().map(str::to_string).collect(),
        });
    }
    pages.sort_by(|a, b| (&a.doc_id, a.page_number).cmp(&(&b.doc_id, b.page_number)));
    Ok(pages)
}
