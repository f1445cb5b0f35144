//! Rule-based structuring of one page into task regions.

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{normalize_line, ExtractedPage, IngestError, IngestWarning};
use crate::ata::{parse_ata_id, AtaId, Level, ManualType, PathEntry, Section, StructuredTask, Subtask};

fn default_locator() -> String {
    "{doc_id}.pdf#page={page}".to_string()
}

/// Structuring configuration, usually loaded from TOML.
///
/// ```toml
/// manual_type = "AMM"
/// revision = "2024-05"
/// locator = "{doc_id}.pdf#page={page}"
///
/// [patterns]
/// task_header = '^(?P<id>\d{2}-\d{2}-\d{2}-\d{3}-\d{3})\s+(?P<title>\S.*)$'
/// section_heading = '^\d+\.\s+\S.*$'
/// subtask_label = '^[A-Z]\.\s+\S.*$'
/// step_marker = '^\(\d+\)\s+\S.*$'
/// node_title = '^(?P<id>\d{2}(?:-\d{2}){0,2})\s+(?P<title>\S.*)$'
/// group_label = '^(?P<title>\d01\s+\S.*)$'
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuringRules {
    pub manual_type: ManualType,
    pub revision: String,
    #[serde(default = "default_locator")]
    pub locator: String,
    pub patterns: RulePatterns,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulePatterns {
    /// Must capture `id` and `title`.
    pub task_header: String,
    pub section_heading: Option<String>,
    pub subtask_label: Option<String>,
    /// When absent every plain line is its own step; when present, plain
    /// lines continue the previous step.
    pub step_marker: Option<String>,
    /// Chapter/section/subject title lines; must capture `id` and `title`.
    pub node_title: Option<String>,
    /// Pageblock group lines; captures `title` or uses the whole line.
    pub group_label: Option<String>,
}

impl StructuringRules {
    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::InvalidRule {
            rule: "rules file",
            reason: e.to_string(),
        })
    }

    pub fn compile(&self) -> Result<CompiledRules, IngestError> {
        let compile = |rule: &'static str, pattern: &str, groups: &[&str]| -> Result<Regex, IngestError> {
            let re = Regex::new(pattern).map_err(|e| IngestError::InvalidRule {
                rule,
                reason: e.to_string(),
            })?;
            for g in groups {
                if !re.capture_names().any(|n| n == Some(*g)) {
                    return Err(IngestError::InvalidRule {
                        rule,
                        reason: format!("missing named group `{g}`"),
                    });
                }
            }
            Ok(re)
        };
        let optional = |rule, pattern: &Option<String>, groups: &[&str]| {
            pattern.as_deref().map(|p| compile(rule, p, groups)).transpose()
        };
        let p = &self.patterns;
        Ok(CompiledRules {
            rules: self.clone(),
            task_header: compile("task_header", &p.task_header, &["id", "title"])?,
            section_heading: optional("section_heading", &p.section_heading, &[])?,
            subtask_label: optional("subtask_label", &p.subtask_label, &[])?,
            step_marker: optional("step_marker", &p.step_marker, &[])?,
            node_title: optional("node_title", &p.node_title, &["id", "title"])?,
            group_label: optional("group_label", &p.group_label, &[])?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CompiledRules {
    pub rules: StructuringRules,
    task_header: Regex,
    section_heading: Option<Regex>,
    subtask_label: Option<Regex>,
    step_marker: Option<Regex>,
    node_title: Option<Regex>,
    group_label: Option<Regex>,
}

impl CompiledRules {
    pub fn locator(&self, doc_id: &str, page: u32) -> String {
        self.rules
            .locator
            .replace("{doc_id}", doc_id)
            .replace("{page}", &page.to_string())
    }
}

#[derive(Debug)]
enum LineKind {
    TaskHeader { id: String, title: String },
    NodeTitle { id: String, title: String },
    GroupLabel(String),
    SectionHeading,
    SubtaskLabel,
    StepMarker,
    Plain,
}

impl CompiledRules {
    fn classify(&self, line: &str) -> Result<LineKind, Vec<&'static str>> {
        let mut matched: Vec<(&'static str, LineKind)> = Vec::new();
        if let Some(c) = self.task_header.captures(line) {
            matched.push((
                "task_header",
                LineKind::TaskHeader {
                    id: c["id"].to_string(),
                    title: c["title"].trim().to_string(),
                },
            ));
        }
        if let Some(c) = self.node_title.as_ref().and_then(|r| r.captures(line)) {
            matched.push((
                "node_title",
                LineKind::NodeTitle {
                    id: c["id"].to_string(),
                    title: c["title"].trim().to_string(),
                },
            ));
        }
        if let Some(c) = self.group_label.as_ref().and_then(|r| r.captures(line)) {
            let title = c.name("title").map_or(line, |m| m.as_str()).trim().to_string();
            matched.push(("group_label", LineKind::GroupLabel(title)));
        }
        let simple = [
            ("section_heading", &self.section_heading),
            ("subtask_label", &self.subtask_label),
            ("step_marker", &self.step_marker),
        ];
        for (name, re) in simple {
            if re.as_ref().is_some_and(|r| r.is_match(line)) {
                let kind = match name {
                    "section_heading" => LineKind::SectionHeading,
                    "subtask_label" => LineKind::SubtaskLabel,
                    _ => LineKind::StepMarker,
                };
                matched.push((name, kind));
            }
        }
        match matched.len() {
            0 => Ok(LineKind::Plain),
            1 => Ok(matched.pop().expect("one match").1),
            _ => Err(matched.into_iter().map(|(n, _)| n).collect()),
        }
    }
}

/// Pageblock context of a task relative to what came before its page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupContext {
    /// No group label or node title seen on this page yet; inherit from the
    /// previous page of the same document.
    Inherit,
    Set(String),
    Cleared,
}

/// A task found on a page, before hierarchy titles are resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSkeleton {
    pub task_id: AtaId,
    pub title: String,
    pub doc_id: String,
    pub page_number: u32,
    pub group: GroupContext,
    /// Normalized task region text, header line included.
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredPage {
    pub doc_id: String,
    pub page_number: u32,
    pub tasks: Vec<(TaskSkeleton, StructuredTask)>,
    /// Node titles announced on the page, in order.
    pub node_titles: Vec<PathEntry>,
    /// Group context in force at the end of the page.
    pub trailing_group: GroupContext,
    pub warnings: Vec<IngestWarning>,
}

struct Region {
    skeleton: TaskSkeleton,
    body: StructuredTask,
    lines: Vec<String>,
}

impl Region {
    fn section(&mut self) -> &mut Section {
        if self.body.sections.is_empty() {
            self.body.sections.push(Section {
                heading: String::new(),
                subtasks: Vec::new(),
            });
        }
        self.body.sections.last_mut().expect("non-empty")
    }

    fn subtask(&mut self) -> &mut Subtask {
        let section = self.section();
        if section.subtasks.is_empty() {
            section.subtasks.push(Subtask {
                label: String::new(),
                steps: Vec::new(),
            });
        }
        section.subtasks.last_mut().expect("non-empty")
    }

    fn finish(mut self) -> (TaskSkeleton, StructuredTask) {
        self.skeleton.source_text = self.lines.join("\n");
        (self.skeleton, self.body)
    }
}

/// Splits a page into task regions, each structured Section → Subtask → Step.
///
/// Every region starts at a task header and ends at the next task header,
/// node title or group label. Within a region every line is either a
/// heading, a label, or part of exactly one step.
pub fn structure_page(page: &ExtractedPage, rules: &CompiledRules) -> Result<StructuredPage, IngestError> {
    let mut out = StructuredPage {
        doc_id: page.doc_id.clone(),
        page_number: page.page_number,
        tasks: Vec::new(),
        node_titles: Vec::new(),
        trailing_group: GroupContext::Inherit,
        warnings: Vec::new(),
    };
    let lines: Vec<String> = page
        .lines
        .iter()
        .map(|l| normalize_line(l))
        .filter(|l| !l.is_empty())
        .collect();
    if lines.is_empty() {
        out.warnings.push(IngestWarning::EmptyPage {
            doc_id: page.doc_id.clone(),
            page_number: page.page_number,
        });
        return Ok(out);
    }

    let mut current: Option<Region> = None;
    let mut unassigned: Vec<String> = Vec::new();
    let mut group = GroupContext::Inherit;
    let continuation = rules.step_marker.is_some();

    for (idx, line) in lines.iter().enumerate() {
        let kind = rules.classify(line).map_err(|names| IngestError::AmbiguousHeader {
            doc_id: page.doc_id.clone(),
            page_number: page.page_number,
            line_number: idx + 1,
            line: line.clone(),
            rules: names,
        })?;
        match kind {
            LineKind::TaskHeader { id, title } => {
                out.tasks.extend(current.take().map(Region::finish));
                let task_id = parse_ata_id(&id)?;
                if task_id.level() != Level::Task {
                    return Err(IngestError::InvalidRule {
                        rule: "task_header",
                        reason: format!("captured id {id:?} is not task level"),
                    });
                }
                current = Some(Region {
                    skeleton: TaskSkeleton {
                        task_id,
                        title,
                        doc_id: page.doc_id.clone(),
                        page_number: page.page_number,
                        group: group.clone(),
                        source_text: String::new(),
                    },
                    body: StructuredTask::default(),
                    lines: vec![line.clone()],
                });
            }
            LineKind::NodeTitle { id, title } => {
                out.tasks.extend(current.take().map(Region::finish));
                let node = parse_ata_id(&id)?;
                out.node_titles.push(PathEntry::new(node, title));
                group = GroupContext::Cleared;
            }
            LineKind::GroupLabel(title) => {
                out.tasks.extend(current.take().map(Region::finish));
                group = GroupContext::Set(title);
            }
            LineKind::SectionHeading => match current.as_mut() {
                Some(region) => {
                    region.body.sections.push(Section {
                        heading: line.clone(),
                        subtasks: Vec::new(),
                    });
                    region.lines.push(line.clone());
                }
                None => unassigned.push(line.clone()),
            },
            LineKind::SubtaskLabel => match current.as_mut() {
                Some(region) => {
                    region.section().subtasks.push(Subtask {
                        label: line.clone(),
                        steps: Vec::new(),
                    });
                    region.lines.push(line.clone());
                }
                None => unassigned.push(line.clone()),
            },
            LineKind::StepMarker => match current.as_mut() {
                Some(region) => {
                    region.subtask().steps.push(line.clone());
                    region.lines.push(line.clone());
                }
                None => unassigned.push(line.clone()),
            },
            LineKind::Plain => match current.as_mut() {
                Some(region) => {
                    let subtask = region.subtask();
                    match subtask.steps.last_mut() {
                        Some(step) if continuation => {
                            step.push('\n');
                            step.push_str(line);
                        }
                        _ => subtask.steps.push(line.clone()),
                    }
                    region.lines.push(line.clone());
                }
                None => unassigned.push(line.clone()),
            },
        }
    }
    out.tasks.extend(current.take().map(Region::finish));
    out.trailing_group = group;

    if out.tasks.is_empty() {
        out.warnings.push(IngestWarning::NoTaskHeaderFound {
            doc_id: page.doc_id.clone(),
            page_number: page.page_number,
        });
    }
    if !unassigned.is_empty() {
        out.warnings.push(IngestWarning::UnassignedLines {
            doc_id: page.doc_id.clone(),
            page_number: page.page_number,
            lines: unassigned,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules() -> CompiledRules {
        StructuringRules {
            manual_type: ManualType::Amm,
            revision: "R1".into(),
            locator: default_locator(),
            patterns: RulePatterns {
                task_header: r"^(?P<id>\d{2}-\d{2}-\d{2}-\d{3}-\d{3})\s+(?P<title>\S.*)$".into(),
                section_heading: Some(r"^\d+\.\s+\S.*$".into()),
                subtask_label: Some(r"^[A-Z]\.\s+\S.*$".into()),
                step_marker: Some(r"^\(\d+\)\s+\S.*$".into()),
                node_title: None,
                group_label: None,
            },
        }
        .compile()
        .unwrap()
    }

    fn page(lines: &[&str]) -> ExtractedPage {
        ExtractedPage {
            doc_id: "doc".into(),
            page_number: 1,
            lines: lines.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn one_section_two_steps() {
        let out = structure_page(
            &page(&["32-41-41-000-801 Removal", "1. Removal", "(1) Release the pressure.", "(2) Remove the valve."]),
            &rules(),
        )
        .unwrap();
        assert_eq!(out.tasks.len(), 1);
        let (skeleton, body) = &out.tasks[0];
        assert_eq!(skeleton.task_id.to_string(), "32-41-41-000-801");
        assert_eq!(skeleton.title, "Removal");
        assert_eq!(body.sections.len(), 1);
        assert_eq!(body.sections[0].heading, "1. Removal");
        assert_eq!(body.sections[0].subtasks.len(), 1);
        assert_eq!(body.sections[0].subtasks[0].steps, ["(1) Release the pressure.", "(2) Remove the valve."]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn prose_only_page_warns() {
        let out = structure_page(&page(&["General notes about the manual.", "No task here."]), &rules()).unwrap();
        assert!(out.tasks.is_empty());
        assert!(out
            .warnings
            .iter()
            .any(|w| matches!(w, IngestWarning::NoTaskHeaderFound { page_number: 1, .. })));
    }

    #[test]
    fn second_header_partitions_lines() {
        let out = structure_page(
            &page(&[
                "32-41-41-000-801 Removal",
                "(1) Remove the valve.",
                "32-41-41-400-801 Installation",
                "(1) Install the valve.",
                "(2) Do a leak test.",
            ]),
            &rules(),
        )
        .unwrap();
        assert_eq!(out.tasks.len(), 2);
        assert_eq!(out.tasks[0].1.lines(), ["(1) Remove the valve."]);
        assert_eq!(out.tasks[1].1.lines(), ["(1) Install the valve.", "(2) Do a leak test."]);
        assert_eq!(out.tasks[1].0.source_text, "32-41-41-400-801 Installation\n(1) Install the valve.\n(2) Do a leak test.");
    }

    #[test]
    fn overlapping_rules_are_a_hard_error() {
        let mut r = rules().rules;
        r.patterns.subtask_label = Some(r"^\S".into());
        let err = structure_page(&page(&["32-41-41-000-801 Removal", "(1) Remove."]), &r.compile().unwrap()).unwrap_err();
        match err {
            IngestError::AmbiguousHeader { line_number, rules, .. } => {
                assert_eq!(line_number, 1);
                assert_eq!(rules, ["task_header", "subtask_label"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn continuation_lines_join_previous_step() {
        let out = structure_page(
            &page(&["32-41-41-000-801 Removal", "(1) Open this circuit breaker:", "   PANEL P6,  BRAKE  "]),
            &rules(),
        )
        .unwrap();
        assert_eq!(out.tasks[0].1.sections[0].subtasks[0].steps, ["(1) Open this circuit breaker:\nPANEL P6, BRAKE"]);
    }

    #[test]
    fn without_step_marker_each_line_is_a_step() {
        let mut r = rules().rules;
        r.patterns.step_marker = None;
        let out = structure_page(&page(&["32-41-41-000-801 Removal", "Open panel.", "Remove valve."]), &r.compile().unwrap()).unwrap();
        assert_eq!(out.tasks[0].1.sections[0].subtasks[0].steps, ["Open panel.", "Remove valve."]);
    }

    #[test]
    fn header_pattern_needs_named_groups() {
        let mut r = rules().rules;
        r.patterns.task_header = r"^\d{2}-\d{2}".into();
        assert!(matches!(r.compile(), Err(IngestError::InvalidRule { rule: "task_header", .. })));
    }

    #[test]
    fn empty_page_warns() {
        let out = structure_page(&page(&["", "   "]), &rules()).unwrap();
        assert_eq!(out.warnings, vec![IngestWarning::EmptyPage { doc_id: "doc".into(), page_number: 1 }]);
    }
}
