use std::collections::{BTreeMap, HashSet};

use super::{CompiledRules, GroupContext, IngestError, IngestWarning, StructuredPage};
use crate::ata::{AtaError, AtaId, Level, PathEntry, TaskRecord};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IngestOutput {
    pub records: Vec<TaskRecord>,
    pub warnings: Vec<IngestWarning>,
}

/// Resolves hierarchy titles across all pages and emits complete records.
///
/// Node titles are collected from every page; conflicting titles for one
/// node are an error. Group labels carry forward through the pages of a
/// document until replaced or cleared by a node title.
pub fn assemble(mut pages: Vec<StructuredPage>, rules: &CompiledRules) -> Result<IngestOutput, IngestError> {
    pages.sort_by(|a, b| (&a.doc_id, a.page_number).cmp(&(&b.doc_id, b.page_number)));

    let mut titles: BTreeMap<AtaId, String> = BTreeMap::new();
    for entry in pages.iter().flat_map(|p| p.node_titles.iter()) {
        match titles.get(&entry.id) {
            Some(existing) if existing != &entry.title => {
                return Err(AtaError::InconsistentPath {
                    id: entry.id,
                    existing: existing.clone(),
                    conflicting: entry.title.clone(),
                }
                .into())
            }
            Some(_) => {}
            None => {
                titles.insert(entry.id, entry.title.clone());
            }
        }
    }

    let mut out = IngestOutput::default();
    let mut seen: HashSet<AtaId> = HashSet::new();
    let mut carried: Option<String> = None;
    let mut current_doc: Option<String> = None;

    for page in pages {
        if current_doc.as_deref() != Some(page.doc_id.as_str()) {
            carried = None;
            current_doc = Some(page.doc_id.clone());
        }
        out.warnings.extend(page.warnings.iter().cloned());
        for (skeleton, body) in page.tasks {
            let group = match &skeleton.group {
                GroupContext::Inherit => carried.clone(),
                GroupContext::Set(label) => Some(label.clone()),
                GroupContext::Cleared => None,
            };
            if !seen.insert(skeleton.task_id) {
                out.warnings.push(IngestWarning::DuplicateTask {
                    doc_id: skeleton.doc_id,
                    page_number: skeleton.page_number,
                    task_id: skeleton.task_id,
                });
                continue;
            }
            let mut path: Vec<PathEntry> = [Level::Chapter, Level::Section, Level::Subject]
                .into_iter()
                .filter_map(|level| skeleton.task_id.truncate(level))
                .filter_map(|node| titles.get(&node).map(|t| PathEntry::new(node, t.clone())))
                .collect();
            let subject = skeleton.task_id.truncate(Level::Subject).expect("task level");
            if let Some(label) = group {
                // a group entry sits directly under its subject entry
                if path.last().is_some_and(|e| e.id == subject) {
                    path.push(PathEntry::new(subject, label));
                }
            }
            if path.is_empty() {
                out.warnings.push(IngestWarning::MissingHierarchy {
                    doc_id: skeleton.doc_id,
                    page_number: skeleton.page_number,
                    task_id: skeleton.task_id,
                });
                continue;
            }
            let record = TaskRecord {
                task_id: skeleton.task_id,
                title: skeleton.title,
                hierarchy_path: path,
                manual_type: rules.rules.manual_type,
                revision: rules.rules.revision.clone(),
                viewer_locator: rules.locator(&skeleton.doc_id, skeleton.page_number),
                structured_body: Some(body),
            };
            record.validate()?;
            out.records.push(record);
        }
        match page.trailing_group {
            GroupContext::Inherit => {}
            GroupContext::Set(label) => carried = Some(label),
            GroupContext::Cleared => carried = None,
        }
    }
    Ok(out)
}
