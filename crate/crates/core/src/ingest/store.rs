//! Knowledge-base file: UTF-8, one JSON task record per line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::IngestError;
use crate::ata::{KnowledgeBase, TaskRecord};

pub fn write_kb<W: Write>(records: &[TaskRecord], mut out: W) -> Result<(), IngestError> {
    for record in records {
        record.validate()?;
        serde_json::to_writer(&mut out, record).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads and validates records. Line numbers in errors are 1-based; blank
/// lines are skipped.
pub fn read_kb<R: Read>(input: R) -> Result<Vec<TaskRecord>, IngestError> {
    let mut records = Vec::new();
    let mut first_seen: HashMap<_, usize> = HashMap::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let violation = |reason: String| IngestError::SchemaViolation { line: line_no, reason };
        let record: TaskRecord = serde_json::from_str(&line).map_err(|e| violation(e.to_string()))?;
        record.validate().map_err(|e| violation(e.to_string()))?;
        if let Some(prev) = first_seen.insert(record.task_id, line_no) {
            return Err(violation(format!("task_id {} already defined at line {prev}", record.task_id)));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_kb_file(records: &[TaskRecord], path: &Path) -> Result<(), IngestError> {
    write_kb(records, BufWriter::new(File::create(path)?))
}

pub fn read_kb_file(path: &Path) -> Result<KnowledgeBase, IngestError> {
    let records = read_kb(File::open(path)?)?;
    Ok(KnowledgeBase::new(records)?)
}
