//! ATA identifiers, task records and the chapter hierarchy.
//!
//! Everything in the knowledge base is keyed by [`AtaId`]. Identifiers are
//! dash-separated: `CC[-SS[-UU[-FFF-NNN]]]`, where the two-digit fields are
//! chapter, section and subject, and the two three-digit codes (function and
//! sequence) only ever appear together at task level.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtaError {
    #[error("malformed ATA identifier {input:?}: {reason}")]
    MalformedAtaId { input: String, reason: &'static str },
    #[error("duplicate task id {0}")]
    DuplicateTaskId(AtaId),
    #[error("inconsistent hierarchy path at {id}: {existing:?} vs {conflicting:?}")]
    InconsistentPath {
        id: AtaId,
        existing: String,
        conflicting: String,
    },
    #[error("invalid task record {task_id}: {reason}")]
    InvalidRecord { task_id: AtaId, reason: String },
    #[error("hierarchy input mixes manuals or revisions: {0}")]
    MixedManuals(String),
}

/// Granularity of an [`AtaId`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Chapter,
    Section,
    Subject,
    Task,
}

/// Three-digit function or sequence code. Leading zeros are significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskCode([u8; 3]);

impl TaskCode {
    pub fn new(code: &str) -> Option<Self> {
        let bytes = code.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(u8::is_ascii_digit) {
            return None;
        }
        Some(Self([bytes[0], bytes[1], bytes[2]]))
    }

    pub fn from_number(n: u16) -> Option<Self> {
        if n > 999 {
            return None;
        }
        Self::new(&format!("{n:03}"))
    }

    pub fn as_str(&self) -> &str {
        // constructed from ASCII digits only
        std::str::from_utf8(&self.0).expect("ascii digits")
    }
}

impl fmt::Display for TaskCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parsed ATA identifier at chapter, section, subject or task granularity.
///
/// Ordering is field-wise with absent fields first, which coincides with
/// lexicographic ordering of the canonical rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtaId {
    chapter: u8,
    section: Option<u8>,
    subject: Option<u8>,
    task: Option<(TaskCode, TaskCode)>,
}

impl AtaId {
    pub fn chapter(chapter: u8) -> Option<Self> {
        (chapter <= 99).then_some(Self {
            chapter,
            section: None,
            subject: None,
            task: None,
        })
    }

    pub fn section(chapter: u8, section: u8) -> Option<Self> {
        let mut id = Self::chapter(chapter)?;
        (section <= 99).then(|| {
            id.section = Some(section);
            id
        })
    }

    pub fn subject(chapter: u8, section: u8, subject: u8) -> Option<Self> {
        let mut id = Self::section(chapter, section)?;
        (subject <= 99).then(|| {
            id.subject = Some(subject);
            id
        })
    }

    pub fn task(chapter: u8, section: u8, subject: u8, function: TaskCode, sequence: TaskCode) -> Option<Self> {
        let mut id = Self::subject(chapter, section, subject)?;
        id.task = Some((function, sequence));
        Some(id)
    }

    pub fn level(&self) -> Level {
        match (self.section, self.subject, self.task) {
            (None, _, _) => Level::Chapter,
            (Some(_), None, _) => Level::Section,
            (Some(_), Some(_), None) => Level::Subject,
            (Some(_), Some(_), Some(_)) => Level::Task,
        }
    }

    pub fn chapter_number(&self) -> u8 {
        self.chapter
    }

    pub fn section_number(&self) -> Option<u8> {
        self.section
    }

    pub fn subject_number(&self) -> Option<u8> {
        self.subject
    }

    pub fn function_code(&self) -> Option<TaskCode> {
        self.task.map(|(f, _)| f)
    }

    pub fn sequence_code(&self) -> Option<TaskCode> {
        self.task.map(|(_, s)| s)
    }

    /// The identifier one level up, or `None` for a chapter.
    pub fn parent(&self) -> Option<AtaId> {
        let mut p = *self;
        match self.level() {
            Level::Chapter => return None,
            Level::Section => p.section = None,
            Level::Subject => p.subject = None,
            Level::Task => p.task = None,
        }
        Some(p)
    }

    /// Truncates to `level`; `None` when `level` is finer than `self`.
    pub fn truncate(&self, level: Level) -> Option<AtaId> {
        if level > self.level() {
            return None;
        }
        let mut id = *self;
        while id.level() > level {
            id = id.parent()?;
        }
        Some(id)
    }

    /// True when every field present in `self` matches `other`.
    pub fn is_prefix_of(&self, other: &AtaId) -> bool {
        self.level() <= other.level() && other.truncate(self.level()) == Some(*self)
    }
}

impl fmt::Display for AtaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}", self.chapter)?;
        if let Some(s) = self.section {
            write!(f, "-{s:02}")?;
        }
        if let Some(u) = self.subject {
            write!(f, "-{u:02}")?;
        }
        if let Some((func, seq)) = self.task {
            write!(f, "-{func}-{seq}")?;
        }
        Ok(())
    }
}

/// Parses a dash-separated identifier of 1, 2, 3 or 5 fields.
pub fn parse_ata_id(text: &str) -> Result<AtaId, AtaError> {
    let malformed = |reason| AtaError::MalformedAtaId {
        input: text.to_string(),
        reason,
    };
    let fields: Vec<&str> = text.split('-').collect();
    if fields.len() > 5 {
        return Err(malformed("more than five fields"));
    }
    if fields.len() == 4 {
        return Err(malformed("function code without sequence code"));
    }
    let two_digit = |field: &str| -> Result<u8, AtaError> {
        if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("non-numeric field"));
        }
        match field.parse::<u32>() {
            Ok(v) if v <= 99 => Ok(v as u8),
            _ => Err(malformed("two-digit field exceeds 99")),
        }
    };
    let three_digit = |field: &str| -> Result<TaskCode, AtaError> {
        if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("non-numeric field"));
        }
        TaskCode::new(field).ok_or_else(|| malformed("task code must have exactly three digits"))
    };

    let mut id = AtaId {
        chapter: two_digit(fields[0])?,
        section: None,
        subject: None,
        task: None,
    };
    if let Some(f) = fields.get(1) {
        id.section = Some(two_digit(f)?);
    }
    if let Some(f) = fields.get(2) {
        id.subject = Some(two_digit(f)?);
    }
    if fields.len() == 5 {
        id.task = Some((three_digit(fields[3])?, three_digit(fields[4])?));
    }
    Ok(id)
}

impl FromStr for AtaId {
    type Err = AtaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ata_id(s)
    }
}

impl Serialize for AtaId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AtaId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_ata_id(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ManualType {
    #[serde(rename = "AMM")]
    Amm,
    #[serde(rename = "FIM")]
    Fim,
}

impl ManualType {
    pub fn as_str(&self) -> &'static str {
        match self {
            ManualType::Amm => "AMM",
            ManualType::Fim => "FIM",
        }
    }
}

impl fmt::Display for ManualType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManualType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AMM" => Ok(ManualType::Amm),
            "FIM" => Ok(ManualType::Fim),
            other => Err(format!("unknown manual type {other:?}")),
        }
    }
}

/// One titled step on the way from chapter to task.
///
/// A pageblock group ("401 Removal") is stored as an entry repeating the
/// subject identifier of the entry before it, with the group label as title.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEntry {
    pub id: AtaId,
    pub title: String,
}

impl PathEntry {
    pub fn new(id: AtaId, title: impl Into<String>) -> Self {
        Self {
            id,
            title: title.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subtask {
    pub label: String,
    pub steps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub heading: String,
    pub subtasks: Vec<Subtask>,
}

/// Verbatim task content, Section → Subtask → Step. Preview only.
///
/// Headings and labels may be empty when the source text had content before
/// the first explicit heading; empty strings are never source lines.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuredTask {
    pub sections: Vec<Section>,
}

impl StructuredTask {
    /// Source lines in reading order: headings, labels and step lines.
    pub fn lines(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for section in &self.sections {
            if !section.heading.is_empty() {
                out.push(section.heading.as_str());
            }
            for subtask in &section.subtasks {
                if !subtask.label.is_empty() {
                    out.push(subtask.label.as_str());
                }
                for step in &subtask.steps {
                    out.extend(step.split('\n'));
                }
            }
        }
        out
    }

    /// Every non-empty string stored in the body, for content-isolation checks.
    pub fn strings(&self) -> impl Iterator<Item = &str> {
        self.sections
            .iter()
            .flat_map(|s| {
                std::iter::once(s.heading.as_str()).chain(s.subtasks.iter().flat_map(|t| {
                    std::iter::once(t.label.as_str()).chain(t.steps.iter().map(String::as_str))
                }))
            })
            .filter(|s| !s.is_empty())
    }
}

/// One certified task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub task_id: AtaId,
    pub title: String,
    pub hierarchy_path: Vec<PathEntry>,
    pub manual_type: ManualType,
    pub revision: String,
    pub viewer_locator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured_body: Option<StructuredTask>,
}

impl TaskRecord {
    /// Checks the record-level invariants: task-level id, non-empty path,
    /// every path entry a prefix of the task id, entries ordered from the
    /// chapter down, and group entries only directly below a subject entry.
    pub fn validate(&self) -> Result<(), AtaError> {
        let invalid = |reason: String| AtaError::InvalidRecord {
            task_id: self.task_id,
            reason,
        };
        if self.task_id.level() != Level::Task {
            return Err(invalid("task_id is not at task level".into()));
        }
        if self.title.trim().is_empty() {
            return Err(invalid("empty title".into()));
        }
        if self.hierarchy_path.is_empty() {
            return Err(invalid("empty hierarchy_path".into()));
        }
        let mut previous: Option<AtaId> = None;
        for entry in &self.hierarchy_path {
            if !entry.id.is_prefix_of(&self.task_id) || entry.id.level() == Level::Task {
                return Err(invalid(format!("path entry {} is not an ancestor of the task", entry.id)));
            }
            if let Some(prev) = previous {
                let repeat = prev == entry.id;
                if repeat && entry.id.level() != Level::Subject {
                    return Err(invalid(format!("group entry under non-subject {}", entry.id)));
                }
                if !repeat && entry.id.level() <= prev.level() {
                    return Err(invalid(format!("path entry {} out of order", entry.id)));
                }
            }
            previous = Some(entry.id);
        }
        Ok(())
    }

    /// Path entries naming hierarchy nodes (chapter, section, subject).
    pub fn node_entries(&self) -> impl Iterator<Item = &PathEntry> {
        self.hierarchy_path
            .iter()
            .enumerate()
            .filter(|(i, e)| *i == 0 || self.hierarchy_path[i - 1].id != e.id)
            .map(|(_, e)| e)
    }

    /// Pageblock group labels attached below the subject.
    pub fn group_entries(&self) -> impl Iterator<Item = &PathEntry> {
        self.hierarchy_path
            .iter()
            .enumerate()
            .filter(|(i, e)| *i > 0 && self.hierarchy_path[i - 1].id == e.id)
            .map(|(_, e)| e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HierarchyNode {
    pub id: AtaId,
    pub title: Option<String>,
    pub children: Vec<HierarchyNode>,
    /// Tasks directly under a subject node, in id order. Empty above subject level.
    pub tasks: Vec<AtaId>,
    pub task_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Hierarchy {
    pub roots: Vec<HierarchyNode>,
}

impl Hierarchy {
    pub fn find(&self, id: &AtaId) -> Option<&HierarchyNode> {
        let mut nodes = &self.roots;
        let mut found = None;
        for level in [Level::Chapter, Level::Section, Level::Subject] {
            let Some(prefix) = id.truncate(level) else { break };
            let node = nodes.iter().find(|n| n.id == prefix)?;
            found = Some(node);
            nodes = &node.children;
        }
        found.filter(|n| n.id == *id)
    }

    pub fn total_tasks(&self) -> usize {
        self.roots.iter().map(|n| n.task_count).sum()
    }
}

/// Builds the chapter → section → subject tree over one manual revision.
pub fn build_hierarchy<'a, I>(records: I) -> Result<Hierarchy, AtaError>
where
    I: IntoIterator<Item = &'a TaskRecord>,
{
    let mut titles: BTreeMap<AtaId, String> = BTreeMap::new();
    let mut tasks: BTreeMap<AtaId, Vec<AtaId>> = BTreeMap::new();
    let mut seen: BTreeMap<AtaId, ()> = BTreeMap::new();
    let mut manual: Option<(ManualType, &str)> = None;

    for record in records {
        record.validate()?;
        match manual {
            None => manual = Some((record.manual_type, record.revision.as_str())),
            Some((m, r)) if m != record.manual_type || r != record.revision => {
                return Err(AtaError::MixedManuals(format!(
                    "{m} {r} and {} {}",
                    record.manual_type, record.revision
                )))
            }
            Some(_) => {}
        }
        if seen.insert(record.task_id, ()).is_some() {
            return Err(AtaError::DuplicateTaskId(record.task_id));
        }
        for entry in record.node_entries() {
            match titles.get(&entry.id) {
                Some(existing) if existing != &entry.title => {
                    return Err(AtaError::InconsistentPath {
                        id: entry.id,
                        existing: existing.clone(),
                        conflicting: entry.title.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    titles.insert(entry.id, entry.title.clone());
                }
            }
        }
        let subject = record
            .task_id
            .truncate(Level::Subject)
            .expect("validated task id");
        tasks.entry(subject).or_default().push(record.task_id);
    }

    // Children of each node, keyed by parent; BTreeMap keeps them in id order.
    let mut children: BTreeMap<Option<AtaId>, Vec<AtaId>> = BTreeMap::new();
    let mut nodes: BTreeMap<AtaId, ()> = BTreeMap::new();
    for subject in tasks.keys() {
        let mut id = Some(*subject);
        while let Some(current) = id {
            if nodes.insert(current, ()).is_none() {
                children.entry(current.parent()).or_default().push(current);
            }
            id = current.parent();
        }
    }
    for list in children.values_mut() {
        list.sort();
    }

    fn build(
        id: AtaId,
        children: &BTreeMap<Option<AtaId>, Vec<AtaId>>,
        titles: &BTreeMap<AtaId, String>,
        tasks: &mut BTreeMap<AtaId, Vec<AtaId>>,
    ) -> HierarchyNode {
        let kids: Vec<HierarchyNode> = children
            .get(&Some(id))
            .map(|ids| ids.iter().map(|c| build(*c, children, titles, tasks)).collect())
            .unwrap_or_default();
        let mut own = tasks.remove(&id).unwrap_or_default();
        own.sort();
        let task_count = own.len() + kids.iter().map(|k| k.task_count).sum::<usize>();
        HierarchyNode {
            id,
            title: titles.get(&id).cloned(),
            children: kids,
            tasks: own,
            task_count,
        }
    }

    let roots = children
        .get(&None)
        .map(|ids| {
            ids.iter()
                .map(|id| build(*id, &children, &titles, &mut tasks))
                .collect()
        })
        .unwrap_or_default();
    Ok(Hierarchy { roots })
}

/// Validated, immutable set of task records with id lookup.
///
/// Task ids are unique across the whole knowledge base, not only within one
/// manual revision, so candidate lists can be keyed by id alone.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    records: Vec<TaskRecord>,
    by_id: HashMap<AtaId, usize>,
}

impl KnowledgeBase {
    pub fn new(records: Vec<TaskRecord>) -> Result<Self, AtaError> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, record) in records.iter().enumerate() {
            record.validate()?;
            if by_id.insert(record.task_id, i).is_some() {
                return Err(AtaError::DuplicateTaskId(record.task_id));
            }
        }
        Ok(Self { records, by_id })
    }

    pub fn records(&self) -> &[TaskRecord] {
        &self.records
    }

    pub fn get(&self, id: &AtaId) -> Option<&TaskRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    /// Position of `id` in [`records`](Self::records).
    pub fn index_of(&self, id: &AtaId) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<TaskRecord> {
        self.records
    }

    /// One hierarchy per (manual type, revision) present.
    pub fn hierarchies(&self) -> Result<BTreeMap<(ManualType, String), Hierarchy>, AtaError> {
        let mut groups: BTreeMap<(ManualType, String), Vec<&TaskRecord>> = BTreeMap::new();
        for r in &self.records {
            groups.entry((r.manual_type, r.revision.clone())).or_default().push(r);
        }
        groups
            .into_iter()
            .map(|(key, recs)| build_hierarchy(recs).map(|h| (key, h)))
            .collect()
    }
}
