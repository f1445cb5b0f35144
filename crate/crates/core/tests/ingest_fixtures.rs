use std::path::PathBuf;

use ataseek_core::ata::{build_hierarchy, parse_ata_id, AtaId, HierarchyNode, PathEntry, Section, StructuredTask, Subtask};
use ataseek_core::ingest::{
    ingest_pages, normalize_text, read_kb, read_page_dir, structure_page, write_kb, IngestWarning, StructuringRules,
};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn rules() -> ataseek_core::ingest::CompiledRules {
    let text = std::fs::read_to_string(fixtures().join("rules.toml")).unwrap();
    StructuringRules::from_toml(&text).unwrap().compile().unwrap()
}

fn id(s: &str) -> AtaId {
    parse_ata_id(s).unwrap()
}

fn steps(lines: &[&str]) -> Vec<String> {
    lines.iter().map(|s| s.to_string()).collect()
}

#[test]
fn fixture_pages_yield_twelve_records() {
    let pages = read_page_dir(&fixtures().join("pages")).unwrap();
    assert_eq!(pages.len(), 8);
    let out = ingest_pages(&pages, &rules()).unwrap();
    assert_eq!(out.records.len(), 12);
    assert_eq!(
        out.warnings,
        vec![
            IngestWarning::NoTaskHeaderFound { doc_id: "amm-25".into(), page_number: 4 },
            IngestWarning::UnassignedLines {
                doc_id: "amm-25".into(),
                page_number: 4,
                lines: vec![
                    "Intentionally left blank for revision highlights.".into(),
                    "Refer to the list of effective pages.".into()
                ],
            },
        ]
    );
}

#[test]
fn checked_in_kb_matches_ingest_output() {
    let pages = read_page_dir(&fixtures().join("pages")).unwrap();
    let out = ingest_pages(&pages, &rules()).unwrap();
    let mut buf = Vec::new();
    write_kb(&out.records, &mut buf).unwrap();
    let expected = std::fs::read_to_string(fixtures().join("kb.jsonl")).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), expected);
    assert_eq!(read_kb(expected.as_bytes()).unwrap(), out.records);
}

#[test]
fn escape_slide_removal_matches_hand_built_structure() {
    let pages = read_page_dir(&fixtures().join("pages")).unwrap();
    let out = ingest_pages(&pages, &rules()).unwrap();
    let rec = out
        .records
        .iter()
        .find(|r| r.task_id == id("25-62-11-000-801"))
        .unwrap();
    assert_eq!(rec.title, "Escape Slide Pack and Cover Removal");
    assert_eq!(rec.viewer_locator, "manuals/amm-25.pdf#page=2");
    assert_eq!(
        rec.hierarchy_path,
        vec![
            PathEntry::new(id("25"), "Equipment/Furnishings"),
            PathEntry::new(id("25-62"), "Escape Slides"),
            PathEntry::new(id("25-62-11"), "Escape Slide Pack"),
            PathEntry::new(id("25-62-11"), "401 Removal/Installation"),
        ]
    );
    let expected = StructuredTask {
        sections: vec![
            Section {
                heading: "1. Preparation".into(),
                subtasks: vec![Subtask {
                    label: "A. Disarm the door.".into(),
                    steps: steps(&[
                        "(1) Put the door mode selector lever in the DISARMED position.",
                        "(2) Open this circuit breaker and install a safety tag:\nPANEL P18, SLIDE CONTROL",
                    ]),
                }],
            },
            Section {
                heading: "2. Removal".into(),
                subtasks: vec![Subtask {
                    label: "A. Remove the slide pack.".into(),
                    steps: steps(&[
                        "(1) Remove the bolts that attach the cover.",
                        "(2) Remove the slide pack and cover from the door.",
                    ]),
                }],
            },
        ],
    };
    assert_eq!(rec.structured_body.as_ref().unwrap(), &expected);
}

#[test]
fn unlabelled_steps_get_implicit_section_and_subtask() {
    let pages = read_page_dir(&fixtures().join("pages")).unwrap();
    let out = ingest_pages(&pages, &rules()).unwrap();
    let rec = out
        .records
        .iter()
        .find(|r| r.task_id == id("28-22-11-400-801"))
        .unwrap();
    assert_eq!(
        rec.structured_body.as_ref().unwrap(),
        &StructuredTask {
            sections: vec![Section {
                heading: String::new(),
                subtasks: vec![Subtask {
                    label: String::new(),
                    steps: steps(&[
                        "(1) Install the boost pump in the canister.",
                        "(2) Do a leak test of the pump connections.",
                    ]),
                }],
            }],
        }
    );
}

#[test]
fn group_label_carries_across_pages() {
    let pages = read_page_dir(&fixtures().join("pages")).unwrap();
    let out = ingest_pages(&pages, &rules()).unwrap();
    let groups = |task: &str| -> Vec<String> {
        out.records
            .iter()
            .find(|r| r.task_id == id(task))
            .unwrap()
            .group_entries()
            .map(|e| e.title.clone())
            .collect()
    };
    // first task on page 2 of amm-32 inherits the group from page 1
    assert_eq!(groups("32-41-31-400-801"), ["401 Removal/Installation"]);
    assert_eq!(groups("25-62-11-200-801"), ["601 Inspection/Check"]);
    assert_eq!(groups("28-41-21-700-801"), ["501 Adjustment/Test"]);
}

#[test]
fn every_fixture_line_is_header_or_step() {
    let rules = rules();
    for page in read_page_dir(&fixtures().join("pages")).unwrap() {
        let structured = structure_page(&page, &rules).unwrap();
        let unassigned: usize = structured
            .warnings
            .iter()
            .map(|w| match w {
                IngestWarning::UnassignedLines { lines, .. } => lines.len(),
                _ => 0,
            })
            .sum();
        let task_lines: usize = structured
            .tasks
            .iter()
            .map(|(_, body)| 1 + body.lines().len())
            .sum();
        let context_lines = structured.node_titles.len()
            + page
                .lines
                .iter()
                .filter(|l| {
                    let l = l.trim();
                    l.len() > 4 && l.as_bytes()[1..3] == *b"01" && l.as_bytes()[3] == b' '
                })
                .count();
        let total = normalize_text(&page.lines.join("\n")).lines().count();
        assert_eq!(task_lines + context_lines + unassigned, total, "page {}:{}", page.doc_id, page.page_number);

        // the structured body concatenates back to the task region text
        for (skeleton, body) in &structured.tasks {
            let mut rebuilt = vec![skeleton.source_text.lines().next().unwrap().to_string()];
            rebuilt.extend(body.lines().iter().map(|s| s.to_string()));
            assert_eq!(rebuilt.join("\n"), skeleton.source_text);
        }
    }
}

fn node(idv: &str, title: &str, count: usize, children: Vec<HierarchyNode>, tasks: &[&str]) -> HierarchyNode {
    HierarchyNode {
        id: id(idv),
        title: Some(title.into()),
        children,
        tasks: tasks.iter().map(|t| id(t)).collect(),
        task_count: count,
    }
}

#[test]
fn hierarchy_matches_golden_tree() {
    let pages = read_page_dir(&fixtures().join("pages")).unwrap();
    let out = ingest_pages(&pages, &rules()).unwrap();
    let h = build_hierarchy(&out.records).unwrap();
    let golden = vec![
        node(
            "25",
            "Equipment/Furnishings",
            4,
            vec![
                node(
                    "25-21",
                    "Passenger Compartment",
                    1,
                    vec![node("25-21-41", "Passenger Seats", 1, vec![], &["25-21-41-000-801"])],
                    &[],
                ),
                node(
                    "25-62",
                    "Escape Slides",
                    3,
                    vec![node(
                        "25-62-11",
                        "Escape Slide Pack",
                        3,
                        vec![],
                        &["25-62-11-000-801", "25-62-11-200-801", "25-62-11-400-801"],
                    )],
                    &[],
                ),
            ],
            &[],
        ),
        node(
            "28",
            "Fuel",
            3,
            vec![
                node(
                    "28-22",
                    "Engine Fuel Feed",
                    2,
                    vec![node("28-22-11", "Fuel Boost Pump", 2, vec![], &["28-22-11-000-801", "28-22-11-400-801"])],
                    &[],
                ),
                node(
                    "28-41",
                    "Fuel Quantity Indicating",
                    1,
                    vec![node("28-41-21", "Fuel Quantity Processor Unit", 1, vec![], &["28-41-21-700-801"])],
                    &[],
                ),
            ],
            &[],
        ),
        node(
            "32",
            "Landing Gear",
            5,
            vec![
                node(
                    "32-09",
                    "Main Landing Gear",
                    1,
                    vec![node("32-09-11", "Shock Strut", 1, vec![], &["32-09-11-600-801"])],
                    &[],
                ),
                node(
                    "32-41",
                    "Brake System",
                    4,
                    vec![
                        node("32-41-31", "Gear Brake", 2, vec![], &["32-41-31-000-801", "32-41-31-400-801"]),
                        node("32-41-41", "Brake Shuttle Valve", 1, vec![], &["32-41-41-000-801"]),
                        node("32-41-51", "Brake Metering Valve", 1, vec![], &["32-41-51-000-801"]),
                    ],
                    &[],
                ),
            ],
            &[],
        ),
    ];
    assert_eq!(h.roots, golden);
    assert_eq!(h.total_tasks(), 12);
}

#[test]
fn synthetic_corpus_round_trips_through_jsonl() {
    use ataseek_core::synth::{synthetic_records, SynthConfig};
    let records = synthetic_records(&SynthConfig::new(8229, 17));
    let mut first = Vec::new();
    write_kb(&records, &mut first).unwrap();
    let back = read_kb(first.as_slice()).unwrap();
    assert_eq!(back.len(), 8229);
    assert_eq!(back, records);
    let mut second = Vec::new();
    write_kb(&back, &mut second).unwrap();
    assert_eq!(first, second);
}
