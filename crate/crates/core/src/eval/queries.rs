//! Benchmark query cases: seeded templates, or an external generator with
//! the same output contract.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mix_seed, EvalError};
use crate::ata::{AtaId, KnowledgeBase, Level, ManualType, TaskRecord};
use crate::rerank::LlmClient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "EN")]
    En,
    #[serde(rename = "KO")]
    Ko,
    #[serde(rename = "other")]
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QueryStyle {
    FullSentence,
    Keyword,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    Clean,
    Typo,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryCase {
    pub text: String,
    pub language: Language,
    pub style: QueryStyle,
    pub condition: Condition,
    pub truth: AtaId,
    pub manual_type: ManualType,
}

const STOPWORDS: &[&str] = &["and", "the", "of", "a", "an", "to", "for", "with", "in", "on", "or"];

/// Lowercased title words minus stopwords.
pub fn title_keywords(title: &str) -> String {
    title
        .split_whitespace()
        .map(str::to_lowercase)
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect::<Vec<_>>()
        .join(" ")
}

const SLOTS: &[&str] = &["title", "title_lower", "keywords", "chapter", "section", "subject", "group"];

/// A query pattern with `{slot}` placeholders. Keyword templates are
/// lowercased after filling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub style: QueryStyle,
    pattern: String,
    slots: Vec<String>,
}

impl Template {
    pub fn new(style: QueryStyle, pattern: &str) -> Result<Self, EvalError> {
        let mut slots = Vec::new();
        let mut rest = pattern;
        while let Some(open) = rest.find('{') {
            let close = rest[open..]
                .find('}')
                .ok_or_else(|| EvalError::BadTemplate(format!("unclosed slot in {pattern:?}")))?;
            let name = &rest[open + 1..open + close];
            if !SLOTS.contains(&name) {
                return Err(EvalError::BadTemplate(format!("unknown slot {{{name}}} in {pattern:?}")));
            }
            slots.push(name.to_string());
            rest = &rest[open + close + 1..];
        }
        Ok(Self { style, pattern: pattern.to_string(), slots })
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn render(&self, record: &TaskRecord) -> Result<String, EvalError> {
        let mut out = self.pattern.clone();
        for slot in &self.slots {
            let value = slot_value(record, slot).ok_or_else(|| EvalError::TemplateSlotMissing {
                slot: slot.clone(),
                task_id: record.task_id,
            })?;
            out = out.replacen(&format!("{{{slot}}}"), &value, 1);
        }
        if self.style == QueryStyle::Keyword {
            out = out.to_lowercase();
        }
        Ok(out)
    }
}

fn level_title(record: &TaskRecord, level: Level) -> Option<String> {
    record
        .node_entries()
        .find(|e| e.id.level() == level)
        .map(|e| e.title.clone())
}

fn slot_value(record: &TaskRecord, slot: &str) -> Option<String> {
    match slot {
        "title" => Some(record.title.clone()),
        "title_lower" => Some(record.title.to_lowercase()),
        "keywords" => Some(title_keywords(&record.title)),
        "chapter" => level_title(record, Level::Chapter),
        "section" => level_title(record, Level::Section),
        "subject" => level_title(record, Level::Subject),
        "group" => record.group_entries().next().map(|e| e.title.clone()),
        _ => None,
    }
}

/// Ordered template pools. Each task draws three of each style; the first
/// keyword template (bare keywords) is always among them.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub full_sentence: Vec<Template>,
    pub keyword: Vec<Template>,
}

impl TemplateSet {
    pub fn new(full_sentence: Vec<Template>, keyword: Vec<Template>) -> Result<Self, EvalError> {
        if full_sentence.len() < 3 || keyword.len() < 3 {
            return Err(EvalError::BadTemplate("need at least 3 templates of each style".into()));
        }
        if full_sentence.iter().any(|t| t.style != QueryStyle::FullSentence)
            || keyword.iter().any(|t| t.style != QueryStyle::Keyword)
        {
            return Err(EvalError::BadTemplate("template style does not match its pool".into()));
        }
        Ok(Self { full_sentence, keyword })
    }

    pub fn standard() -> Self {
        let fs = |p: &str| Template::new(QueryStyle::FullSentence, p).expect("valid template");
        let kw = |p: &str| Template::new(QueryStyle::Keyword, p).expect("valid template");
        Self::new(
            vec![
                fs("How do I perform the {title_lower}?"),
                fs("What is the procedure for the {title_lower}?"),
                fs("Show me the {title_lower} task in {chapter}."),
                fs("I need the steps for {title_lower} under {section}."),
                fs("Which task covers {title_lower}?"),
                fs("Where is the {title_lower} procedure for the {subject}?"),
            ],
            vec![
                kw("{keywords}"),
                kw("{chapter} {keywords}"),
                kw("{keywords} procedure"),
                kw("{keywords} task"),
                kw("{section} {keywords}"),
            ],
        )
        .expect("standard set is valid")
    }
}

pub trait QueryGenerator: Send + Sync {
    /// Exactly three full-sentence then three keyword clean cases.
    fn generate(&self, record: &TaskRecord, seed: u64) -> Result<Vec<QueryCase>, EvalError>;
}

fn case(record: &TaskRecord, text: String, style: QueryStyle) -> QueryCase {
    QueryCase {
        text,
        language: Language::En,
        style,
        condition: Condition::Clean,
        truth: record.task_id,
        manual_type: record.manual_type,
    }
}

#[derive(Debug, Clone)]
pub struct TemplateGenerator {
    pub templates: TemplateSet,
}

impl Default for TemplateGenerator {
    fn default() -> Self {
        Self { templates: TemplateSet::standard() }
    }
}

impl QueryGenerator for TemplateGenerator {
    fn generate(&self, record: &TaskRecord, seed: u64) -> Result<Vec<QueryCase>, EvalError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fs: Vec<usize> = sample(&mut rng, self.templates.full_sentence.len(), 3).into_vec();
        fs.sort_unstable();
        let mut kw: Vec<usize> = sample(&mut rng, self.templates.keyword.len() - 1, 2)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        kw.sort_unstable();
        kw.insert(0, 0);
        let mut out = Vec::with_capacity(6);
        for i in fs {
            out.push(case(record, self.templates.full_sentence[i].render(record)?, QueryStyle::FullSentence));
        }
        for i in kw {
            out.push(case(record, self.templates.keyword[i].render(record)?, QueryStyle::Keyword));
        }
        Ok(out)
    }
}

/// Asks a completion backend for the six queries. The reply must be a JSON
/// object `{"full_sentence": [3 strings], "keyword": [3 strings]}`.
pub struct LlmQueryGenerator {
    client: Arc<dyn LlmClient>,
    max_tokens: u32,
}

impl LlmQueryGenerator {
    pub fn new(client: Arc<dyn LlmClient>) -> Self {
        Self { client, max_tokens: 512 }
    }

    pub fn prompt(record: &TaskRecord) -> String {
        let path: Vec<&str> = record.hierarchy_path.iter().map(|e| e.title.as_str()).collect();
        format!(
            "Write search queries a maintenance technician might type to find this task.\n\
             Task title: {}\nHierarchy: {}\n\
             Reply with only a JSON object {{\"full_sentence\": [three questions], \"keyword\": [three short keyword queries]}}.\n",
            serde_json::to_string(&record.title).expect("strings serialize"),
            serde_json::to_string(&path.join(" > ")).expect("strings serialize"),
        )
    }
}

#[derive(Deserialize)]
struct GeneratedQueries {
    full_sentence: Vec<String>,
    keyword: Vec<String>,
}

impl QueryGenerator for LlmQueryGenerator {
    fn generate(&self, record: &TaskRecord, _seed: u64) -> Result<Vec<QueryCase>, EvalError> {
        let fail = |reason: String| EvalError::GeneratorFailed { task_id: record.task_id, reason };
        let text = self
            .client
            .complete(&Self::prompt(record), self.max_tokens)
            .map_err(|e| fail(e.to_string()))?;
        let start = text.find('{').ok_or_else(|| fail("no JSON object in reply".into()))?;
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<GeneratedQueries>();
        let parsed = match stream.next() {
            Some(Ok(p)) => p,
            Some(Err(e)) => return Err(fail(e.to_string())),
            None => return Err(fail("empty reply".into())),
        };
        let blank = |v: &[String]| v.iter().any(|s| s.trim().is_empty());
        if parsed.full_sentence.len() != 3 || parsed.keyword.len() != 3 {
            return Err(fail("expected three queries of each style".into()));
        }
        if blank(&parsed.full_sentence) || blank(&parsed.keyword) {
            return Err(fail("blank query".into()));
        }
        Ok(parsed
            .full_sentence
            .into_iter()
            .map(|t| case(record, t, QueryStyle::FullSentence))
            .chain(parsed.keyword.into_iter().map(|t| case(record, t, QueryStyle::Keyword)))
            .collect())
    }
}

/// Six clean cases per record, in knowledge-base order. Each record gets a
/// seed derived from `seed` and its position.
pub fn generate_cases(
    kb: &KnowledgeBase,
    generator: &dyn QueryGenerator,
    seed: u64,
) -> Result<Vec<QueryCase>, EvalError> {
    let per_record: Vec<Vec<QueryCase>> = kb
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, r)| generator.generate(r, mix_seed(seed, i as u64)))
        .collect::<Result<_, _>>()?;
    Ok(per_record.into_iter().flatten().collect())
}

/// One typo variant per clean case, in the same order.
pub fn typo_cases(cases: &[QueryCase], rate: f64, seed: u64) -> Result<Vec<QueryCase>, EvalError> {
    cases
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Ok(QueryCase {
                text: super::inject_typos(&c.text, rate, mix_seed(seed, i as u64))?,
                condition: Condition::Typo,
                ..c.clone()
            })
        })
        .collect()
}

/// Checks every case's truth exists in `kb`.
pub fn validate_cases(cases: &[QueryCase], kb: &KnowledgeBase) -> Result<(), EvalError> {
    let mut missing: HashSet<AtaId> = HashSet::new();
    for c in cases {
        if kb.get(&c.truth).is_none() {
            missing.insert(c.truth);
        }
    }
    match missing.into_iter().min() {
        Some(id) => Err(EvalError::UnknownTruth(id)),
        None => Ok(()),
    }
}
