//! The `troupe` command line: run an agent or manager hierarchy from a
//! config file, chat with it, or run the bundled benchmarks.
//!
//! Exit status: 0 when the task completed, 1 when it failed, 2 for usage,
//! config and I/O errors.

pub mod build;
pub mod config;
pub mod script;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use troupe::bench::data::{
    bundled_catalog, bundled_corpus, bundled_qa, bundled_qa_gold, bundled_shop_gold, bundled_shop_tasks,
    GoldScript,
};
use troupe::bench::{run_qa, run_shop, BenchOptions, BenchReport};
use troupe::{
    serialize_invocation, ActionInvocation, Backend, CompletionStatus, Console, HttpBackend, LlmConfig,
    ScriptedBackend, TaskPackage, Trace,
};

use crate::build::build_root;
use crate::config::load_plan;

pub const EXIT_COMPLETED: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Creator of the top-level task.
pub const USER: &str = "User";

/// Ends a chat session.
pub const QUIT: &str = "quit";

pub const CHAT_PROMPT: &str = "User:";

#[derive(Debug, Parser)]
#[command(name = "troupe", version, about = "Task-oriented LLM agents and manager hierarchies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one task and print the answer.
    Run {
        config: PathBuf,
        #[arg(long)]
        task: String,
        /// Write the run trace here as line-delimited JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Interactive session: every input line is a task; `quit` ends it.
    Chat {
        config: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a bundled benchmark suite.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, value_enum, default_value = "gold")]
        backend: BackendChoice,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Run only the first N items.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, default_value_t = troupe::agent::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Model name for `--backend http`.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        api_key_env: Option<String>,
        /// Write the trace of every item here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Qa,
    Shop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    /// Replay the gold script of each item.
    Gold,
    /// Finish immediately with an empty answer.
    Empty,
    /// Buy an over-budget product where the data provides one (shop only).
    Overbudget,
    /// An OpenAI-compatible endpoint.
    Http,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, console: Arc<dyn Console>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match cli.command {
        Command::Run { config, task, trace } => cmd_run(&config, &task, trace.as_deref(), console, out, err),
        Command::Chat { config, trace } => cmd_chat(&config, trace.as_deref(), console, err),
        Command::Bench {
            suite,
            backend,
            report,
            limit,
            max_steps,
            parallelism,
            model,
            endpoint,
            api_key_env,
            trace,
        } => {
            let http = model.map(|m| {
                let mut cfg = LlmConfig::new(m);
                if let Some(e) = endpoint {
                    cfg.endpoint = e;
                }
                if let Some(k) = api_key_env {
                    cfg.api_key_env = k;
                }
                cfg
            });
            let request = BenchRequest {
                suite,
                backend,
                limit,
                max_steps,
                parallelism,
                http,
            };
            cmd_bench(&request, report.as_deref(), trace.as_deref(), out, err)
        }
    }
}

fn write_trace(trace: &Trace, path: Option<&Path>, err: &mut dyn Write) -> bool {
    let Some(path) = path else { return true };
    match trace.write_jsonl(path) {
        Ok(()) => true,
        Err(e) => {
            let _ = writeln!(err, "error: cannot write trace {}: {e}", path.display());
            false
        }
    }
}

/// Runs `task` on the config's root member and prints its status and answer.
pub fn cmd_run(
    config: &Path,
    task: &str,
    trace_path: Option<&Path>,
    console: Arc<dyn Console>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let plan = match load_plan(config) {
        Ok(plan) => plan,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut root = match build_root(&plan, console) {
        Ok(root) => root,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let package = match TaskPackage::new(task, USER, &root.profile().name) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: --task: {e}");
            return EXIT_USAGE;
        }
    };
    let trace = Trace::new();
    trace.task_created(&package);
    let done = root.execute_traced(package, &trace);
    let _ = writeln!(out, "Status: {}", done.completion);
    let _ = writeln!(out, "Answer: {}", done.answer);
    if !write_trace(&trace, trace_path, err) {
        return EXIT_USAGE;
    }
    match done.completion {
        CompletionStatus::Completed => EXIT_COMPLETED,
        _ => EXIT_FAILED,
    }
}

/// Reads tasks from `console` until `quit` or end of input. Human agents
/// and `HumanInput` actions read from the same console.
pub fn cmd_chat(config: &Path, trace_path: Option<&Path>, console: Arc<dyn Console>, err: &mut dyn Write) -> i32 {
    let plan = match load_plan(config) {
        Ok(plan) => plan,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut root = match build_root(&plan, console.clone()) {
        Ok(root) => root,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let name = root.profile().name.clone();
    let trace = Trace::new();
    loop {
        let line = match console.ask(CHAT_PROMPT) {
            Ok(Some(line)) => line,
            Ok(None) => break,
            Err(e) => {
                let _ = writeln!(err, "error: reading input: {e}");
                break;
            }
        };
        let line = line.trim();
        if line.eq_ignore_ascii_case(QUIT) {
            break;
        }
        if line.is_empty() {
            continue;
        }
        let package = TaskPackage::new(line, USER, &name).expect("non-blank instruction and valid names");
        trace.task_created(&package);
        let done = root.execute_traced(package, &trace);
        let reply = match done.completion {
            CompletionStatus::Completed => format!("{name}: {}", done.answer),
            _ if done.answer.is_empty() => format!("{name} failed: no answer within its step budget"),
            _ => format!("{name} failed: {}", done.answer),
        };
        if console.say(&reply).is_err() {
            break;
        }
    }
    if !write_trace(&trace, trace_path, err) {
        return EXIT_USAGE;
    }
    EXIT_COMPLETED
}

#[derive(Debug, Clone)]
pub struct BenchRequest {
    pub suite: Suite,
    pub backend: BackendChoice,
    pub limit: Option<usize>,
    pub max_steps: usize,
    pub parallelism: usize,
    /// Required for [`BackendChoice::Http`].
    pub http: Option<LlmConfig>,
}

impl BenchRequest {
    pub fn new(suite: Suite, backend: BackendChoice) -> Self {
        BenchRequest {
            suite,
            backend,
            limit: None,
            max_steps: troupe::agent::DEFAULT_MAX_STEPS,
            parallelism: 1,
            http: None,
        }
    }
}

fn scripted(replies: Vec<String>) -> Arc<dyn Backend> {
    Arc::new(ScriptedBackend::queue(replies))
}

fn backends(
    request: &BenchRequest,
    gold: &[GoldScript],
) -> Result<impl Fn(usize) -> Result<Arc<dyn Backend>, String> + Sync, String> {
    let http: Option<Arc<dyn Backend>> = match (request.backend, &request.http) {
        (BackendChoice::Http, Some(cfg)) => {
            Some(Arc::new(HttpBackend::new(cfg.clone()).map_err(|e| e.to_string())?))
        }
        (BackendChoice::Http, None) => return Err("--backend http needs --model".to_string()),
        _ => None,
    };
    if request.backend == BackendChoice::Overbudget && request.suite == Suite::Qa {
        return Err("--backend overbudget applies to the shop suite only".to_string());
    }
    let choice = request.backend;
    let gold = gold.to_vec();
    let empty = serialize_invocation(&ActionInvocation::finish(""));
    Ok(move |i: usize| -> Result<Arc<dyn Backend>, String> {
        let script = gold.iter().find(|s| s.item == i);
        Ok(match choice {
            BackendChoice::Gold => scripted(script.map(GoldScript::replies).unwrap_or_default()),
            BackendChoice::Empty => scripted(vec![empty.clone()]),
            BackendChoice::Overbudget => scripted(
                script
                    .map(|s| s.over_budget_replies().unwrap_or_else(|| s.replies()))
                    .unwrap_or_default(),
            ),
            BackendChoice::Http => http.clone().expect("http backend is built above"),
        })
    })
}

/// Runs a bundled suite; returns the report, or a usage error message.
pub fn bench_report(request: &BenchRequest, trace: &Trace) -> Result<BenchReport, String> {
    let options = BenchOptions {
        max_steps: request.max_steps.max(1),
        parallelism: request.parallelism.max(1),
        trace: trace.clone(),
    };
    let limit = |n: usize| request.limit.map_or(n, |l| l.min(n));
    match request.suite {
        Suite::Qa => {
            let items = bundled_qa();
            let items = &items[..limit(items.len())];
            let backend_for = backends(request, &bundled_qa_gold())?;
            run_qa(Arc::new(bundled_corpus()), items, &|i, _| backend_for(i), &options).map_err(|e| e.to_string())
        }
        Suite::Shop => {
            let tasks = bundled_shop_tasks();
            let tasks = &tasks[..limit(tasks.len())];
            let backend_for = backends(request, &bundled_shop_gold())?;
            run_shop(Arc::new(bundled_catalog()), tasks, &|i, _| backend_for(i), &options)
                .map_err(|e| e.to_string())
        }
    }
}

/// Prints the score table and writes the JSON report.
pub fn cmd_bench(
    request: &BenchRequest,
    report_path: Option<&Path>,
    trace_path: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let trace = if trace_path.is_some() { Trace::new() } else { Trace::disabled() };
    let report = match bench_report(request, &trace) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let _ = write!(out, "{}", report.table());
    if let Some(path) = report_path {
        if let Err(e) = fs::write(path, report.to_json() + "\n") {
            let _ = writeln!(err, "error: cannot write report {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    if !write_trace(&trace, trace_path, err) {
        return EXIT_USAGE;
    }
    EXIT_COMPLETED
}
