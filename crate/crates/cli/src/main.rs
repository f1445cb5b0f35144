use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use ataseek_core::eval::{
    generate_cases, read_jsonl, run_benchmark, typo_cases, write_jsonl, Backend, BenchConfig, Condition,
    LlmQueryGenerator, QueryCase, QueryGenerator, TemplateGenerator,
};
use ataseek_core::ingest::{ingest_pages, read_kb_file, read_page_dir, score_extraction, write_kb_file, StructuringRules};
use ataseek_core::rerank::{HttpLlmClient, Reranker, DEFAULT_TIMEOUT};
use ataseek_core::synth::{synthetic_records, SynthConfig};
use ataseek_service::{load_index, ServiceConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ataseek", version, about = "Maintenance-task retrieval: ingest, benchmark, serve")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structure extracted page text into a knowledge-base JSONL file.
    Ingest {
        #[arg(long)]
        pages: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the post-editing queue here (JSONL).
        #[arg(long)]
        warnings: Option<PathBuf>,
    },
    /// Token P/R/F1 and CER of a hypothesis extraction against a reference.
    ScoreExtraction {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
    },
    /// Benchmark tooling.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Run the HTTP service. Flags override the environment.
    Serve(ServeArgs),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Evaluate query cases against one or more backends.
    Run {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        cases: PathBuf,
        /// Repeatable or comma-separated.
        #[arg(long = "backend", value_enum, value_delimiter = ',', required = true)]
        backends: Vec<BackendArg>,
        #[arg(long)]
        llm_endpoint: Option<String>,
        #[arg(long)]
        embed_endpoint: Option<String>,
        #[arg(long)]
        report: PathBuf,
        /// Per-case log (JSONL).
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        depth: usize,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_millis() as u64)]
        llm_timeout_ms: u64,
    },
    /// Six clean queries per task.
    GenQueries {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Use an external completion endpoint instead of templates.
        #[arg(long)]
        llm_endpoint: Option<String>,
    },
    /// Add one typo variant per clean case.
    Typos {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        rate: f64,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit only the variants, not the clean cases followed by variants.
        #[arg(long)]
        only_typos: bool,
    },
    /// Write a seeded synthetic knowledge base.
    SynthKb {
        #[arg(long, default_value_t = 8229)]
        tasks: usize,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Omit structured bodies.
        #[arg(long)]
        no_bodies: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Bm25,
    Dense,
    #[value(name = "dense+rerank")]
    DenseRerank,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
    #[arg(long)]
    llm_endpoint: Option<String>,
    #[arg(long)]
    embed_endpoint: Option<String>,
    #[arg(long)]
    session_log: Option<PathBuf>,
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long)]
    display_k: Option<usize>,
    #[arg(long)]
    rerank_depth: Option<usize>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn read_cases(path: &Path) -> Result<Vec<QueryCase>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn ingest(pages: &Path, rules: &Path, out: &Path, warnings: Option<&Path>) -> Result<()> {
    let rules_text = std::fs::read_to_string(rules).with_context(|| format!("reading {}", rules.display()))?;
    let rules = StructuringRules::from_toml(&rules_text)?.compile()?;
    let pages = read_page_dir(pages)?;
    let output = ingest_pages(&pages, &rules)?;
    write_kb_file(&output.records, out)?;
    if let Some(path) = warnings {
        let mut w = create(path)?;
        for warning in &output.warnings {
            serde_json::to_writer(&mut w, warning)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    eprintln!(
        "{} pages -> {} tasks, {} warnings",
        pages.len(),
        output.records.len(),
        output.warnings.len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench_run(
    kb: &Path,
    cases: &Path,
    backends: &[BackendArg],
    llm_endpoint: Option<&str>,
    embed_endpoint: Option<&str>,
    report: &Path,
    log: Option<&Path>,
    config: BenchConfig,
    llm_timeout: Duration,
) -> Result<()> {
    let index = load_index(kb, embed_endpoint)?;
    let cases = read_cases(cases)?;
    let backends = backends
        .iter()
        .map(|b| {
            Ok(match b {
                BackendArg::Bm25 => Backend::Bm25,
                BackendArg::Dense => Backend::Dense,
                BackendArg::DenseRerank => {
                    let Some(url) = llm_endpoint else {
                        bail!("dense+rerank needs --llm-endpoint");
                    };
                    let client = HttpLlmClient::new(url, llm_timeout);
                    Backend::DenseRerank(Reranker::new(Arc::new(client)).with_timeout(llm_timeout))
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let run = run_benchmark(&index, &cases, &backends, &config)?;
    std::fs::write(report, run.report.to_json()).with_context(|| format!("writing {}", report.display()))?;
    if let Some(path) = log {
        let mut w = create(path)?;
        write_jsonl(&run.log, &mut w)?;
        w.flush()?;
    }
    print!("{}", run.report.table());
    Ok(())
}

fn gen_queries(kb: &Path, seed: u64, out: &Path, llm_endpoint: Option<&str>) -> Result<()> {
    let kb = read_kb_file(kb)?;
    let generator: Box<dyn QueryGenerator> = match llm_endpoint {
        Some(url) => Box::new(LlmQueryGenerator::new(Arc::new(HttpLlmClient::new(url, DEFAULT_TIMEOUT)))),
        None => Box::new(TemplateGenerator::default()),
    };
    let cases = generate_cases(&kb, generator.as_ref(), seed)?;
    let mut w = create(out)?;
    write_jsonl(&cases, &mut w)?;
    w.flush()?;
    eprintln!("{} tasks -> {} cases", kb.len(), cases.len());
    Ok(())
}

fn typos(input: &Path, rate: f64, seed: u64, out: Option<&Path>, only_typos: bool) -> Result<()> {
    let cases = read_cases(input)?;
    let clean: Vec<QueryCase> = cases.into_iter().filter(|c| c.condition == Condition::Clean).collect();
    let variants = typo_cases(&clean, rate, seed)?;
    let all: Vec<QueryCase> = if only_typos { variants } else { clean.into_iter().chain(variants).collect() };
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write_jsonl(&all, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_jsonl(&all, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let mut config = ServiceConfig::from_env()?;
    config.kb_path = args.kb.or(config.kb_path);
    config.bind = args.bind.unwrap_or(config.bind);
    config.llm_endpoint = args.llm_endpoint.or(config.llm_endpoint);
    config.embed_endpoint = args.embed_endpoint.or(config.embed_endpoint);
    config.session_log = args.session_log.or(config.session_log);
    config.static_dir = args.static_dir.or(config.static_dir);
    config.display_k = args.display_k.unwrap_or(config.display_k);
    config.rerank_depth = args.rerank_depth.unwrap_or(config.rerank_depth);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(ataseek_service::serve(config))?;
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Ingest { pages, rules, out, warnings } => ingest(&pages, &rules, &out, warnings.as_deref()),
        Command::ScoreExtraction { reference, hyp } => {
            let reference = std::fs::read_to_string(&reference).with_context(|| format!("reading {}", reference.display()))?;
            let hyp = std::fs::read_to_string(&hyp).with_context(|| format!("reading {}", hyp.display()))?;
            println!("{}", serde_json::to_string(&score_extraction(&reference, &hyp)?)?);
            Ok(())
        }
        Command::Bench(BenchCommand::Run {
            kb,
            cases,
            backends,
            llm_endpoint,
            embed_endpoint,
            report,
            log,
            depth,
            confidence,
            llm_timeout_ms,
        }) => {
            let config = BenchConfig { depth, confidence: Some(confidence) };
            bench_run(
                &kb,
                &cases,
                &backends,
                llm_endpoint.as_deref(),
                embed_endpoint.as_deref(),
                &report,
                log.as_deref(),
                config,
                Duration::from_millis(llm_timeout_ms),
            )
        }
        Command::Bench(BenchCommand::GenQueries { kb, seed, out, llm_endpoint }) => {
            gen_queries(&kb, seed, &out, llm_endpoint.as_deref())
        }
        Command::Bench(BenchCommand::Typos { input, rate, seed, out, only_typos }) => {
            typos(&input, rate, seed, out.as_deref(), only_typos)
        }
        Command::Bench(BenchCommand::SynthKb { tasks, seed, out, no_bodies }) => {
            let mut config = SynthConfig::new(tasks, seed);
            config.with_bodies = !no_bodies;
            write_kb_file(&synthetic_records(&config), &out)?;
            eprintln!("wrote {tasks} tasks to {}", out.display());
            Ok(())
        }
        Command::Serve(args) => serve(args),
    }
}
