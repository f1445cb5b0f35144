//! Seeded synthetic knowledge bases with realistic ATA structure.
//!
//! Every subject is a distinct component, and every task title is
//! "<component> <action>", so titles are unique across the corpus.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ata::{AtaId, ManualType, PathEntry, Section, StructuredTask, Subtask, TaskCode, TaskRecord};

const CHAPTERS: &[(u8, &str)] = &[
    (21, "Air Conditioning"),
    (22, "Auto Flight"),
    (23, "Communications"),
    (24, "Electrical Power"),
    (25, "Equipment/Furnishings"),
    (26, "Fire Protection"),
    (27, "Flight Controls"),
    (28, "Fuel"),
    (29, "Hydraulic Power"),
    (30, "Ice and Rain Protection"),
    (31, "Indicating/Recording Systems"),
    (32, "Landing Gear"),
    (33, "Lights"),
    (34, "Navigation"),
    (35, "Oxygen"),
    (36, "Pneumatic"),
    (38, "Water/Waste"),
    (49, "Airborne Auxiliary Power"),
    (52, "Doors"),
    (73, "Engine Fuel and Control"),
];

const SECTION_KINDS: &[&str] = &[
    "Distribution",
    "Control",
    "Indicating",
    "Supply",
    "Monitoring",
    "Protection",
    "Storage",
    "Actuation",
];

const QUALIFIERS: &[&str] = &[
    "Main", "Auxiliary", "Forward", "Aft", "Upper", "Lower", "Inboard", "Outboard", "Primary", "Standby",
    "Emergency", "Center", "Alternate", "Manual", "Electric", "Hydraulic", "Pneumatic", "Digital", "Overhead",
    "Cargo", "Cabin", "Flight Deck", "Nose", "Wing", "Tail", "Engine", "Ground", "Trim", "Bleed", "Heated",
];

const NOUNS: &[&str] = &[
    "Valve", "Pump", "Actuator", "Sensor", "Switch", "Filter", "Controller", "Relay", "Panel", "Duct", "Harness",
    "Light", "Motor", "Transmitter", "Indicator", "Regulator", "Accumulator", "Reservoir", "Heat Exchanger", "Fan",
    "Compressor", "Computer", "Antenna", "Seal", "Bearing", "Bracket", "Manifold", "Nozzle", "Probe", "Module",
    "Cable", "Pulley", "Door", "Latch", "Hinge", "Strut", "Cylinder", "Check Valve", "Shutoff Valve",
    "Shuttle Valve", "Brake", "Wheel", "Tire", "Fuse", "Circuit Breaker", "Battery", "Charger", "Inverter",
    "Generator", "Detector", "Bottle", "Mask", "Slide", "Seat", "Window", "Wiper", "Lamp", "Gauge", "Transducer",
    "Servo",
];

struct Action {
    function: u16,
    title: &'static str,
    group: &'static str,
    verb: &'static str,
}

const AMM_ACTIONS: &[Action] = &[
    Action { function: 0, title: "Removal", group: "401 Removal/Installation", verb: "remove" },
    Action { function: 400, title: "Installation", group: "401 Removal/Installation", verb: "install" },
    Action { function: 200, title: "Inspection", group: "601 Inspection/Check", verb: "examine" },
    Action { function: 700, title: "Operational Test", group: "501 Adjustment/Test", verb: "test" },
    Action { function: 820, title: "Adjustment", group: "501 Adjustment/Test", verb: "adjust" },
    Action { function: 600, title: "Servicing", group: "301 Servicing", verb: "service" },
    Action { function: 100, title: "Cleaning", group: "701 Cleaning/Painting", verb: "clean" },
];

const FIM_ACTIONS: &[Action] = &[
    Action { function: 810, title: "Fault Isolation", group: "101 Fault Isolation", verb: "isolate the fault in" },
    Action { function: 811, title: "Indication Failure", group: "101 Fault Isolation", verb: "troubleshoot" },
    Action { function: 812, title: "Leak Troubleshooting", group: "101 Fault Isolation", verb: "find the leak in" },
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub tasks: usize,
    pub seed: u64,
    /// Probability that a subject also carries fault-isolation tasks.
    pub fim_fraction: f64,
    pub revision: String,
    pub with_bodies: bool,
}

impl SynthConfig {
    pub fn new(tasks: usize, seed: u64) -> Self {
        Self {
            tasks,
            seed,
            fim_fraction: 0.3,
            revision: "SYN-R1".into(),
            with_bodies: true,
        }
    }
}

fn body(action: &Action, component: &str) -> StructuredTask {
    let lower = component.to_lowercase();
    StructuredTask {
        sections: vec![Section {
            heading: format!("1. Procedure for {}", action.title.to_lowercase()),
            subtasks: vec![Subtask {
                label: "A. Job set-up.".into(),
                steps: vec![
                    "(1) Open the applicable access panels per the job set-up list.".into(),
                    format!("(2) Do the steps to {} the {lower} in the prescribed sequence.", action.verb),
                    "(3) Restore the airplane to its usual condition.".into(),
                ],
            }],
        }],
    }
}

/// Generates `config.tasks` records, deterministic in `config.seed`.
pub fn synthetic_records(config: &SynthConfig) -> Vec<TaskRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut components: Vec<String> = QUALIFIERS
        .iter()
        .flat_map(|q| NOUNS.iter().map(move |n| format!("{q} {n}")))
        .collect();
    components.shuffle(&mut rng);

    // next free subject number per (chapter, section)
    let mut next_subject = std::collections::HashMap::<(u8, u8), u8>::new();
    let mut records = Vec::with_capacity(config.tasks);
    let mut page = 1u32;
    let mut component_idx = 0usize;

    while records.len() < config.tasks {
        let round = component_idx / components.len();
        let base = &components[component_idx % components.len()];
        component_idx += 1;
        let component = if round == 0 { base.clone() } else { format!("{base} {}", round + 1) };

        let (chapter, chapter_title) = CHAPTERS[rng.random_range(0..CHAPTERS.len())];
        let section_slot = rng.random_range(0..SECTION_KINDS.len());
        let section = (section_slot as u8 + 1) * 10;
        let slot = next_subject.entry((chapter, section)).or_insert(10);
        if *slot > 99 {
            continue;
        }
        let subject = *slot;
        *slot += 1;

        let chapter_word = chapter_title.split('/').next().unwrap_or(chapter_title);
        let section_title = format!("{chapter_word} {}", SECTION_KINDS[section_slot]);
        let chapter_id = AtaId::chapter(chapter).expect("valid chapter");
        let section_id = AtaId::section(chapter, section).expect("valid section");
        let subject_id = AtaId::subject(chapter, section, subject).expect("valid subject");

        let mut actions: Vec<(ManualType, &Action)> = Vec::new();
        let n_amm = rng.random_range(3..=AMM_ACTIONS.len());
        let mut amm: Vec<&Action> = AMM_ACTIONS.iter().collect();
        amm.shuffle(&mut rng);
        amm.truncate(n_amm);
        amm.sort_by_key(|a| a.function);
        actions.extend(amm.into_iter().map(|a| (ManualType::Amm, a)));
        if rng.random_bool(config.fim_fraction) {
            let n_fim = rng.random_range(1..=FIM_ACTIONS.len());
            actions.extend(FIM_ACTIONS[..n_fim].iter().map(|a| (ManualType::Fim, a)));
        }

        for (manual, action) in actions {
            if records.len() == config.tasks {
                break;
            }
            let task_id = AtaId::task(
                chapter,
                section,
                subject,
                TaskCode::from_number(action.function).expect("3 digits"),
                TaskCode::new("801").expect("3 digits"),
            )
            .expect("valid task id");
            records.push(TaskRecord {
                task_id,
                title: format!("{component} {}", action.title),
                hierarchy_path: vec![
                    PathEntry::new(chapter_id, chapter_title),
                    PathEntry::new(section_id, section_title.clone()),
                    PathEntry::new(subject_id, component.clone()),
                    PathEntry::new(subject_id, action.group),
                ],
                manual_type: manual,
                revision: config.revision.clone(),
                viewer_locator: format!("{}/ch{chapter:02}.pdf#page={page}", manual.as_str().to_lowercase()),
                structured_body: config.with_bodies.then(|| body(action, &component)),
            });
            page += 1;
        }
    }
    records
}
