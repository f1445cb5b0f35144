//! Hit@k benchmark across backends, grouped by manual type and condition.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::queries::{validate_cases, Condition, Language, QueryCase, QueryStyle};
use super::{wilson_ci, EvalError};
use crate::ata::{AtaId, ManualType};
use crate::index::{CandidateList, CandidateSource, IndexError, SearchIndex, DEFAULT_RERANK_DEPTH};
use crate::rerank::Reranker;

#[derive(Debug, Clone)]
pub enum Backend {
    Bm25,
    Dense,
    DenseRerank(Reranker),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Bm25 => "bm25",
            Backend::Dense => "dense",
            Backend::DenseRerank(_) => "dense+rerank",
        }
    }

    pub fn search(&self, index: &SearchIndex, query: &str, depth: usize) -> Result<CandidateList, IndexError> {
        match self {
            Backend::Bm25 => index.bm25_search(query, depth),
            Backend::Dense => index.dense_search_text(query, depth),
            Backend::DenseRerank(r) => {
                let dense = index.dense_search_text(query, depth)?;
                Ok(r.rerank(query, &dense, index.kb()))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Candidates retrieved per query (and handed to the re-ranker).
    pub depth: usize,
    /// Confidence level for per-cell Wilson intervals; `None` omits them.
    pub confidence: Option<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { depth: DEFAULT_RERANK_DEPTH, confidence: Some(0.95) }
    }
}

/// One (case, backend) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseLog {
    pub case_index: usize,
    pub query: String,
    pub language: Language,
    pub style: QueryStyle,
    pub condition: Condition,
    pub manual_type: ManualType,
    pub backend: String,
    pub truth: AtaId,
    /// 1-based rank of the truth, `None` when absent or on error.
    pub rank: Option<usize>,
    pub source: Option<CandidateSource>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitStats {
    pub n: usize,
    pub hits1: usize,
    pub hits5: usize,
    /// Percentages.
    pub hit1: f64,
    pub hit5: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit1_ci: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit5_ci: Option<[f64; 2]>,
}

impl HitStats {
    fn new(n: usize, hits1: usize, hits5: usize, confidence: Option<f64>) -> Result<Self, EvalError> {
        let pct = |h: usize| 100.0 * h as f64 / n as f64;
        let ci = |h: usize| -> Result<Option<[f64; 2]>, EvalError> {
            confidence
                .map(|c| wilson_ci(h as u64, n as u64, c).map(|(lo, hi)| [100.0 * lo, 100.0 * hi]))
                .transpose()
        };
        Ok(Self {
            n,
            hits1,
            hits5,
            hit1: pct(hits1),
            hit5: pct(hits5),
            hit1_ci: ci(hits1)?,
            hit5_ci: ci(hits5)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub manual_type: ManualType,
    pub condition: Condition,
    pub backend: String,
    #[serde(flatten)]
    pub stats: HitStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSummary {
    pub backend: String,
    #[serde(flatten)]
    pub stats: HitStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cases: usize,
    pub depth: usize,
    pub backends: Vec<String>,
    /// Sorted by manual type, condition, then backend order.
    pub cells: Vec<Cell>,
    pub overall: Vec<BackendSummary>,
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: BenchReport,
    pub log: Vec<CaseLog>,
}

pub fn run_benchmark(
    index: &SearchIndex,
    cases: &[QueryCase],
    backends: &[Backend],
    config: &BenchConfig,
) -> Result<BenchRun, EvalError> {
    let mut names = HashSet::new();
    for b in backends {
        if !names.insert(b.name()) {
            return Err(EvalError::DuplicateBackend(b.name().to_string()));
        }
    }
    validate_cases(cases, index.kb())?;
    let log: Vec<CaseLog> = cases
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, case)| backends.iter().map(move |b| (i, case, b)))
        .map(|(i, case, backend)| {
            let result = backend.search(index, &case.text, config.depth);
            let (rank, source, error) = match result {
                Ok(list) => (list.rank_of(&case.truth), Some(list.source), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            CaseLog {
                case_index: i,
                query: case.text.clone(),
                language: case.language,
                style: case.style,
                condition: case.condition,
                manual_type: case.manual_type,
                backend: backend.name().to_string(),
                truth: case.truth,
                rank,
                source,
                error,
            }
        })
        .collect();
    let names: Vec<String> = backends.iter().map(|b| b.name().to_string()).collect();
    let report = report_from_log(&log, &names, config)?;
    Ok(BenchRun { report, log })
}

/// Aggregates a per-case log. Independent of log order.
pub fn report_from_log(log: &[CaseLog], backends: &[String], config: &BenchConfig) -> Result<BenchReport, EvalError> {
    let order = |name: &str| backends.iter().position(|b| b == name).unwrap_or(usize::MAX);
    let hit = |l: &CaseLog, k: usize| l.rank.is_some_and(|r| r <= k) as usize;
    let mut cells: BTreeMap<(ManualType, Condition, usize, &str), [usize; 3]> = BTreeMap::new();
    let mut overall: BTreeMap<(usize, &str), [usize; 3]> = BTreeMap::new();
    let mut case_ids = HashSet::new();
    for l in log {
        case_ids.insert(l.case_index);
        let b = order(&l.backend);
        for acc in [
            cells.entry((l.manual_type, l.condition, b, &l.backend)).or_default(),
            overall.entry((b, &l.backend)).or_default(),
        ] {
            acc[0] += 1;
            acc[1] += hit(l, 1);
            acc[2] += hit(l, 5);
        }
    }
    Ok(BenchReport {
        cases: case_ids.len(),
        depth: config.depth,
        backends: backends.to_vec(),
        cells: cells
            .into_iter()
            .map(|((manual_type, condition, _, backend), [n, h1, h5])| {
                Ok(Cell {
                    manual_type,
                    condition,
                    backend: backend.to_string(),
                    stats: HitStats::new(n, h1, h5, config.confidence)?,
                })
            })
            .collect::<Result<_, EvalError>>()?,
        overall: overall
            .into_iter()
            .map(|((_, backend), [n, h1, h5])| {
                Ok(BackendSummary { backend: backend.to_string(), stats: HitStats::new(n, h1, h5, config.confidence)? })
            })
            .collect::<Result<_, EvalError>>()?,
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Markdown table, one row per cell.
    pub fn table(&self) -> String {
        let mut out = String::from("| Manual | Condition | Backend | n | Hit@1 (%) | Hit@5 (%) |\n|---|---|---|---:|---:|---:|\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "| {} | {:?} | {} | {} | {:.2} | {:.2} |",
                c.manual_type.as_str(),
                c.condition,
                c.backend,
                c.stats.n,
                c.stats.hit1,
                c.stats.hit5
            );
        }
        for o in &self.overall {
            let _ = writeln!(
                out,
                "| all | all | {} | {} | {:.2} | {:.2} |",
                o.backend, o.stats.n, o.stats.hit1, o.stats.hit5
            );
        }
        out
    }
}
