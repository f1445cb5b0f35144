//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p ataseek-cli --test acceptance`.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ataseek_core::ata::{parse_ata_id, AtaId, KnowledgeBase, PathEntry, Section, StructuredTask, Subtask, TaskCode};
use ataseek_core::eval::{
    generate_cases, run_benchmark, wilson_ci, Backend, BenchConfig, Condition, Language, QueryCase,
    QueryStyle, TemplateGenerator,
};
use ataseek_core::index::{tokenize, Bm25Index, CandidateList, CandidateSource, EmbeddingText, LocalHashEmbedder, SearchIndex, BM25_B, BM25_K1};
use ataseek_core::ingest::{
    ingest_pages, normalize_text, read_kb, read_page_dir, score_extraction, write_kb, StructuringRules,
};
use ataseek_core::rerank::mock::{FailingLlm, FailureMode, FuzzLlm, OracleLlm};
use ataseek_core::rerank::Reranker;
use ataseek_core::synth::{synthetic_records, SynthConfig};
use ataseek_service::{app, load_index, AppState, ManualClock, SessionStore};
use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn synth_index(tasks: usize, seed: u64) -> SearchIndex {
    let kb = KnowledgeBase::new(synthetic_records(&SynthConfig::new(tasks, seed))).unwrap();
    SearchIndex::build(kb, Arc::new(LocalHashEmbedder)).unwrap()
}

fn wilson_exactness() -> Check {
    for (s, n, lo, hi) in [(179, 197, 86.0, 94.1), (170, 197, 80.8, 90.4)] {
        let (l, h) = wilson_ci(s, n, 0.95).map_err(|e| e.to_string())?;
        let round = |x: f64| (x * 1000.0).round() / 10.0;
        ensure!((round(l), round(h)) == (lo, hi), "{s}/{n}: got ({:.3}, {:.3})", l * 100.0, h * 100.0);
    }
    Ok("179/197 -> 86.0-94.1%, 170/197 -> 80.8-90.4%".into())
}

fn edit_distance(a: &[char], b: &[char]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in t[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = t[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
        }
    }
    t[a.len()][b.len()]
}

fn token_overlap(a: &str, b: &str) -> usize {
    let mut counts = std::collections::HashMap::<&str, i64>::new();
    for t in a.split_whitespace() {
        *counts.entry(t).or_default() += 1;
    }
    b.split_whitespace()
        .filter(|t| match counts.get_mut(t) {
            Some(c) if *c > 0 => {
                *c -= 1;
                true
            }
            _ => false,
        })
        .count()
}

fn extraction_oracle() -> Check {
    const ALPHABET: &[char] = &['a', 'b', 'r', 'k', 'E', '7', '-', '.', ' ', ' ', '\n', 'ü', '밸'];
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let text = |rng: &mut ChaCha8Rng| -> String {
        (0..rng.random_range(1..=200)).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
    };
    let mut pairs = 0;
    while pairs < 150 {
        let reference = text(&mut rng);
        let mut hyp: Vec<char> = reference.chars().collect();
        for _ in 0..rng.random_range(0..15) {
            let at = rng.random_range(0..=hyp.len());
            match rng.random_range(0..3) {
                0 => hyp.insert(at, ALPHABET[rng.random_range(0..ALPHABET.len())]),
                1 if at < hyp.len() => {
                    hyp.remove(at);
                }
                _ if at < hyp.len() => hyp[at] = ALPHABET[rng.random_range(0..ALPHABET.len())],
                _ => {}
            }
        }
        hyp.truncate(200);
        let hyp: String = if rng.random_bool(0.2) { text(&mut rng) } else { hyp.into_iter().collect() };
        let r_norm: Vec<char> = normalize_text(&reference).chars().collect();
        if r_norm.is_empty() {
            ensure!(score_extraction(&reference, &hyp).is_err(), "empty reference accepted");
            continue;
        }
        let got = score_extraction(&reference, &hyp).map_err(|e| e.to_string())?;
        let m = token_overlap(&reference, &hyp) as f64;
        let (rt, ht) = (reference.split_whitespace().count() as f64, hyp.split_whitespace().count() as f64);
        let p = if ht == 0.0 { 0.0 } else { m / ht };
        let r = m / rt;
        let f1 = if p > 0.0 && r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let h_norm: Vec<char> = normalize_text(&hyp).chars().collect();
        let cer = edit_distance(&r_norm, &h_norm) as f64 / r_norm.len() as f64;
        ensure!(
            (got.precision, got.recall, got.f1, got.cer) == (p, r, f1, cer),
            "pair {pairs}: got {got:?}, oracle ({p}, {r}, {f1}, {cer})"
        );
        pairs += 1;
    }
    Ok(format!("{pairs} pairs identical"))
}

fn bm25_oracle() -> Check {
    const VOCAB: &[&str] =
        &["brake", "valve", "pump", "fuel", "removal", "installation", "test", "gear", "slide", "door", "seat", "28-22"];
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let n_docs = 50;
    let docs: Vec<EmbeddingText> = (0..n_docs)
        .map(|i| EmbeddingText {
            task_id: AtaId::task(32, 10, 10, TaskCode::from_number(i).unwrap(), TaskCode::new("801").unwrap()).unwrap(),
            text: (0..rng.random_range(1..12)).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" → "),
        })
        .collect();
    let index = Bm25Index::build(&docs);
    let toks: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&d.text)).collect();
    let avgdl = toks.iter().map(Vec::len).sum::<usize>() as f64 / n_docs as f64;
    for q in 0..100 {
        let query: Vec<&str> = (0..rng.random_range(1..5)).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect();
        let terms = tokenize(&query.join(" "));
        let mut expected: Vec<(AtaId, f64)> = Vec::new();
        for (d, doc) in docs.iter().enumerate() {
            let mut score = 0.0;
            let mut hit = false;
            for term in &terms {
                let tf = toks[d].iter().filter(|t| *t == term).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                hit = true;
                let df = toks.iter().filter(|t| t.iter().any(|x| x == term)).count() as f64;
                let idf = (1.0 + (n_docs as f64 - df + 0.5) / (df + 0.5)).ln();
                let norm = BM25_K1 * (1.0 - BM25_B + BM25_B * toks[d].len() as f64 / avgdl);
                score += idf * tf * (BM25_K1 + 1.0) / (tf + norm);
            }
            if hit {
                expected.push((doc.task_id, score));
            }
        }
        expected.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let got = index.search(&query.join(" "), usize::MAX).map_err(|e| e.to_string())?;
        let want: Vec<AtaId> = expected.iter().map(|e| e.0).collect();
        ensure!(got.ids() == want, "query {q} {query:?}: ranking differs");
        for (c, e) in got.entries.iter().zip(&expected) {
            ensure!((c.score - e.1).abs() < 1e-9, "query {q}: score {} vs {}", c.score, e.1);
        }
    }
    Ok("100 queries over 50 docs, rankings identical, scores within 1e-9".into())
}

fn dense_exactness() -> Check {
    let index = synth_index(1000, 1000);
    let cases = generate_cases(index.kb(), &TemplateGenerator::default(), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dense = index.dense_index();
    for case in cases.choose_multiple(&mut rng, 100) {
        let q = index.embed_query(&case.text).map_err(|e| e.to_string())?;
        let mut all: Vec<(AtaId, f64)> = (0..dense.len())
            .map(|row| {
                let s = q.as_slice().iter().zip(dense.vector(row)).map(|(a, b)| *a as f64 * *b as f64).sum::<f64>();
                (dense.ids()[row], s)
            })
            .collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for n in [1, 10, 50, 1000] {
            let got = index.dense_search_text(&case.text, n).map_err(|e| e.to_string())?;
            let want: Vec<AtaId> = all[..n].iter().map(|a| a.0).collect();
            ensure!(got.ids() == want, "{:?} n={n}: order differs", case.text);
        }
    }
    Ok("100 queries on 1000 tasks, n in {1, 10, 50, 1000}".into())
}

fn random_dense(index: &SearchIndex, rng: &mut ChaCha8Rng) -> CandidateList {
    let mut ids: Vec<AtaId> = index.kb().records().iter().map(|r| r.task_id).collect();
    ids.shuffle(rng);
    ids.truncate(rng.random_range(1..=50));
    CandidateList::from_ordered(CandidateSource::Dense, ids.into_iter().enumerate().map(|(i, id)| (id, 1.0 - i as f64 / 64.0)))
}

fn fallback_equivalence() -> Check {
    let index = synth_index(300, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let modes =
        [FailureMode::Garbage, FailureMode::Empty, FailureMode::Timeout, FailureMode::Transport, FailureMode::Hang(Duration::from_millis(150))];
    for trial in 0..200 {
        let mode = modes[rng.random_range(0..modes.len())];
        let reranker = Reranker::new(Arc::new(FailingLlm::new(mode))).with_timeout(Duration::from_millis(15));
        let dense = random_dense(&index, &mut rng);
        let out = reranker.rerank("query", &dense, index.kb());
        ensure!(out.entries == dense.entries, "trial {trial} {mode:?}: order changed");
        ensure!(out.source == CandidateSource::Fallback, "trial {trial}: source {}", out.source);
    }
    Ok("200 trials across garbage/empty/timeout/transport/hang".into())
}

fn permutation_safety() -> Check {
    let index = synth_index(300, 31);
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let reranker = Reranker::new(Arc::new(FuzzLlm::new(33)));
    let mut reranked = 0;
    for call in 0..1000 {
        let dense = random_dense(&index, &mut rng);
        let out = reranker.rerank("query", &dense, index.kb());
        let mut a = out.ids();
        let mut b = dense.ids();
        a.sort();
        b.sort();
        ensure!(a == b, "call {call}: candidate set changed");
        ensure!(out.check_invariants().is_ok(), "call {call}: {:?}", out.check_invariants());
        reranked += usize::from(out.source == CandidateSource::Reranked);
    }
    Ok(format!("1000 fuzzed calls, {reranked} reranked, none added/dropped/duplicated"))
}

fn oracle_ceiling() -> Check {
    let index = synth_index(500, 500);
    let cases = generate_cases(index.kb(), &TemplateGenerator::default(), 500).unwrap();
    let oracle = OracleLlm::new(cases.iter().map(|c| (c.text.clone(), c.truth)));
    let backends = [Backend::Dense, Backend::DenseRerank(Reranker::new(Arc::new(oracle)))];
    let run = run_benchmark(&index, &cases, &backends, &BenchConfig::default()).map_err(|e| e.to_string())?;
    let dense_at_50 = run.log.iter().filter(|l| l.backend == "dense" && l.rank.is_some()).count();
    let oracle_at_1 = run.log.iter().filter(|l| l.backend == "dense+rerank" && l.rank == Some(1)).count();
    ensure!(oracle_at_1 == dense_at_50, "oracle Hit@1 {oracle_at_1} != dense Hit@50 {dense_at_50}");

    let titles: Vec<QueryCase> = index
        .kb()
        .records()
        .iter()
        .map(|r| QueryCase {
            text: r.title.clone(),
            language: Language::En,
            style: QueryStyle::Keyword,
            condition: Condition::Clean,
            truth: r.task_id,
            manual_type: r.manual_type,
        })
        .collect();
    let run = run_benchmark(&index, &titles, &[Backend::Bm25, Backend::Dense], &BenchConfig::default())
        .map_err(|e| e.to_string())?;
    for s in &run.report.overall {
        ensure!(s.stats.hit1 == 100.0, "exact-title Hit@1 for {} is {}", s.backend, s.stats.hit1);
    }
    Ok(format!("oracle Hit@1 = dense Hit@50 = {dense_at_50}/{}; exact titles 100% for bm25 and dense", cases.len()))
}

fn bench_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_ataseek");
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "ataseek {args:?}: {}", String::from_utf8_lossy(&out.stderr));
        Ok(())
    };
    run(&["bench", "synth-kb", "--tasks", "400", "--seed", "17", "--out", &p("kb.jsonl")])?;
    run(&["bench", "gen-queries", "--kb", &p("kb.jsonl"), "--seed", "17", "--out", &p("clean.jsonl")])?;
    run(&["bench", "typos", "--in", &p("clean.jsonl"), "--rate", "0.3", "--seed", "17", "--out", &p("cases.jsonl")])?;
    let mut reports = Vec::new();
    for i in 0..2 {
        let report = p(&format!("report{i}.json"));
        run(&[
            "bench", "run", "--kb", &p("kb.jsonl"), "--cases", &p("cases.jsonl"), "--backend", "bm25,dense,dense+rerank",
            "--llm-endpoint", "http://127.0.0.1:9", "--report", &report,
        ])?;
        reports.push(std::fs::read(&report).map_err(|e| e.to_string())?);
    }
    ensure!(reports[0] == reports[1], "reports differ between runs");
    let report: Value = serde_json::from_slice(&reports[0]).map_err(|e| e.to_string())?;
    let cells = report["cells"].as_array().ok_or("no cells")?;
    let keys: BTreeSet<(String, String, String)> = cells
        .iter()
        .map(|c| (c["manual_type"].to_string(), c["condition"].to_string(), c["backend"].to_string()))
        .collect();
    let mut expected = BTreeSet::new();
    for m in ["\"AMM\"", "\"FIM\""] {
        for c in ["\"Clean\"", "\"Typo\""] {
            for b in ["\"bm25\"", "\"dense\"", "\"dense+rerank\""] {
                expected.insert((m.to_string(), c.to_string(), b.to_string()));
            }
        }
    }
    ensure!(keys == expected && cells.len() == 12, "cell layout {keys:?}");
    for c in cells {
        ensure!(c["hit1"].as_f64() <= c["hit5"].as_f64(), "Hit@1 > Hit@5 in {c}");
    }
    Ok(format!("{} bytes identical across runs, 2x2x3 cells, Hit@1 <= Hit@5", reports[0].len()))
}

fn collect_strings<'a>(v: &'a Value, skip: &[&str], out: &mut Vec<&'a str>) {
    match v {
        Value::String(s) => out.push(s),
        Value::Array(a) => a.iter().for_each(|x| collect_strings(x, skip, out)),
        Value::Object(m) => m
            .iter()
            .filter(|(k, _)| !skip.contains(&k.as_str()))
            .for_each(|(_, x)| collect_strings(x, skip, out)),
        _ => {}
    }
}

fn compliance() -> Check {
    let kb_path = fixtures().join("kb.jsonl");
    let raw = std::fs::read_to_string(&kb_path).map_err(|e| e.to_string())?;
    let index = load_index(&kb_path, None).map_err(|e| e.to_string())?;
    let mut queries: Vec<String> = generate_cases(index.kb(), &TemplateGenerator::default(), 1)
        .unwrap()
        .into_iter()
        .map(|c| c.text)
        .collect();
    queries.extend(["how to remove escape slide", "brake", "zzz", "시트 교환"].map(String::from));
    let ids: Vec<AtaId> = index.kb().records().iter().map(|r| r.task_id).collect();
    let state = Arc::new(AppState::new(SessionStore::in_memory(), Arc::new(ManualClock::new(0))));
    state.install(index);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let mut strings_checked = 0;
    let mut responses = 0;
    rt.block_on(async {
        let mut check = |v: &Value, skip: &[&str]| -> Result<(), String> {
            let mut found = Vec::new();
            collect_strings(v, skip, &mut found);
            for s in found {
                let quoted = serde_json::to_string(s).unwrap();
                ensure!(raw.contains(&quoted), "{s:?} not in knowledge base file");
                strings_checked += 1;
            }
            responses += 1;
            Ok(())
        };
        for q in &queries {
            let req = Request::post("/api/search")
                .header("content-type", "application/json")
                .body(Body::from(json!({"query": q, "k": 50}).to_string()))
                .unwrap();
            let resp = app(state.clone(), None).oneshot(req).await.unwrap();
            ensure!(resp.status().is_success(), "search {q:?}: {}", resp.status());
            let v: Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
            check(&v, &["session_id", "source"])?;
        }
        for id in &ids {
            let req = Request::get(format!("/api/task/{id}")).body(Body::empty()).unwrap();
            let resp = app(state.clone(), None).oneshot(req).await.unwrap();
            ensure!(resp.status().is_success(), "task {id}: {}", resp.status());
            let v: Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
            check(&v, &[])?;
        }
        Ok(())
    })?;
    Ok(format!("{responses} responses, {strings_checked} strings all verbatim in kb.jsonl"))
}

fn ingest_round_trip() -> Check {
    let records = synthetic_records(&SynthConfig::new(8229, 17));
    let mut buf = Vec::new();
    write_kb(&records, &mut buf).map_err(|e| e.to_string())?;
    let back = read_kb(buf.as_slice()).map_err(|e| e.to_string())?;
    ensure!(back == records, "synthetic corpus changed through JSONL");

    let rules_text = std::fs::read_to_string(fixtures().join("rules.toml")).map_err(|e| e.to_string())?;
    let rules = StructuringRules::from_toml(&rules_text).and_then(|r| r.compile()).map_err(|e| e.to_string())?;
    let pages = read_page_dir(&fixtures().join("pages")).map_err(|e| e.to_string())?;
    let out = ingest_pages(&pages, &rules).map_err(|e| e.to_string())?;
    let golden = read_kb(std::fs::read(fixtures().join("kb.jsonl")).map_err(|e| e.to_string())?.as_slice())
        .map_err(|e| e.to_string())?;
    ensure!(out.records == golden, "fixture pages no longer reproduce kb.jsonl");

    let id = |s: &str| parse_ata_id(s).unwrap();
    let rec = out.records.iter().find(|r| r.task_id == id("25-62-11-000-801")).ok_or("escape slide task missing")?;
    let steps = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let hand_built = StructuredTask {
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
    ensure!(rec.structured_body.as_ref() == Some(&hand_built), "escape slide body differs from hand-built structure");
    ensure!(
        rec.hierarchy_path
            == vec![
                PathEntry::new(id("25"), "Equipment/Furnishings"),
                PathEntry::new(id("25-62"), "Escape Slides"),
                PathEntry::new(id("25-62-11"), "Escape Slide Pack"),
                PathEntry::new(id("25-62-11"), "401 Removal/Installation"),
            ],
        "escape slide path differs"
    );
    let unique: HashSet<AtaId> = back.iter().map(|r| r.task_id).collect();
    Ok(format!("{} synthetic records field-identical; {} fixture records match golden", unique.len(), golden.len()))
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { name: "wilson-ci-exactness", budget: Duration::from_secs(1), run: wilson_exactness },
        Criterion { name: "extraction-metric-oracle", budget: Duration::from_secs(5), run: extraction_oracle },
        Criterion { name: "bm25-oracle", budget: Duration::from_secs(5), run: bm25_oracle },
        Criterion { name: "dense-exactness", budget: Duration::from_secs(10), run: dense_exactness },
        Criterion { name: "fallback-bit-equivalence", budget: Duration::from_secs(60), run: fallback_equivalence },
        Criterion { name: "permutation-safety", budget: Duration::from_secs(60), run: permutation_safety },
        Criterion { name: "oracle-ceiling-benchmark", budget: Duration::from_secs(60), run: oracle_ceiling },
        Criterion { name: "bench-determinism-and-shape", budget: Duration::from_secs(120), run: bench_determinism },
        Criterion { name: "compliance-invariant", budget: Duration::from_secs(60), run: compliance },
        Criterion { name: "ingest-round-trip", budget: Duration::from_secs(60), run: ingest_round_trip },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.iter().any(|f| c.name.contains(f.as_str()))) {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; over budget {:?}", c.budget)),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {} [{:.2}s <= {:?}] {detail}", c.name, elapsed.as_secs_f64(), c.budget),
            Err(reason) => {
                failed += 1;
                println!("FAIL {} [{:.2}s] {reason}", c.name, elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
