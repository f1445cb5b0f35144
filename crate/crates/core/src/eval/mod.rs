//! Synthetic retrieval benchmark: query generation, typo injection, Hit@k
//! over several backends, and Wilson confidence intervals.

mod bench;
mod queries;
mod stats;
mod typos;

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::ata::AtaId;

pub use bench::{
    report_from_log, run_benchmark, Backend, BackendSummary, BenchConfig, BenchReport, BenchRun, CaseLog, Cell,
    HitStats,
};
pub use queries::{
    generate_cases, title_keywords, typo_cases, validate_cases, Condition, Language, LlmQueryGenerator,
    QueryCase, QueryGenerator, QueryStyle, Template, TemplateGenerator, TemplateSet,
};
pub use stats::{hit_at_k, wilson_ci, Z_95};
pub use typos::inject_typos;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("template slot {{{slot}}} has no value for task {task_id}")]
    TemplateSlotMissing { slot: String, task_id: AtaId },
    #[error("bad template: {0}")]
    BadTemplate(String),
    #[error("query generation failed for {task_id}: {reason}")]
    GeneratorFailed { task_id: AtaId, reason: String },
    #[error("typo rate {0} outside (0, 1]")]
    InvalidRate(f64),
    #[error("confidence interval needs at least one sample")]
    ZeroSample,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("case truth {0} is not in the knowledge base")]
    UnknownTruth(AtaId),
    #[error("backend {0} listed twice")]
    DuplicateBackend(String),
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

/// SplitMix64 of `seed` and a stream index, for independent per-item seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reads line-delimited JSON, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::BadLine { line: i + 1, reason: e.to_string() })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(items: &[T], mut writer: impl Write) -> Result<(), EvalError> {
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| EvalError::Io(e.to_string()))?;
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}
