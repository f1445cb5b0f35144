use serde::{Deserialize, Serialize};

use crate::ata::{AtaId, TaskRecord};

pub const SEPARATOR: &str = " \u{2192} ";

/// Retrieval text for one task: hierarchy titles root-to-leaf, then the task
/// title, joined by " → ". Built from titles only; the structured body
/// never contributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingText {
    pub task_id: AtaId,
    pub text: String,
}

pub fn build_embedding_text(record: &TaskRecord) -> EmbeddingText {
    let text = record
        .hierarchy_path
        .iter()
        .map(|e| e.title.as_str())
        .chain(std::iter::once(record.title.as_str()))
        .collect::<Vec<_>>()
        .join(SEPARATOR);
    EmbeddingText {
        task_id: record.task_id,
        text,
    }
}
