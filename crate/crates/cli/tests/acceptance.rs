//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero when any
//! criterion fails. Runs offline; the live smoke test is skipped unless
//! `TROUPE_LIVE_MODEL` is set.

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use troupe::actions::{evaluate, stdio_console, CalcError, ScriptedConsole, BUILTIN_ACTIONS};
use troupe::bench::data::bundled_shop_gold;
use troupe::bench::{exact_match, f1_score, BenchReport, Difficulty};
use troupe::manager::TASK_PARAM;
use troupe::testing::{StubResponse, StubServer};
use troupe::trace::replay_view;
use troupe::{
    compose_prompt, parse_invocation, serialize_invocation, ActionInvocation, ActionRegistry, Agent,
    AgentProfile, Backend, CalculatorAction, CompletionStatus, HttpBackend, LlmConfig, ManagerAgent,
    PromptTemplate, ScriptedBackend, TaskPackage, ThinkAction, Trace, TraceEvent, TraceRecord, FINISH,
};
use troupe_cli::build::build_root;
use troupe_cli::config::load_plan;
use troupe_cli::{bench_report, cmd_chat, BackendChoice, BenchRequest, Suite, EXIT_COMPLETED};

type Outcome = Result<String, String>;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

// ---- parser round-trip ----

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "a", "Z", "7", " ", "\"", "\\", "\n", "\t", "{", "}", ":", ",", "é", "中", "Action:", "💡", "'", "/",
    ];
    let n = rng.random_range(0..12);
    (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

fn parser_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for i in 0..1000 {
        let mut inv = ActionInvocation::new(*BUILTIN_ACTIONS.choose(&mut rng).unwrap());
        for _ in 0..rng.random_range(0..=4) {
            let key_len = rng.random_range(1..8);
            let key: String = (0..key_len).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
            inv = inv.with(key, random_text(&mut rng));
        }
        let text = serialize_invocation(&inv);
        let back = parse_invocation(&text).map_err(|e| format!("case {i}: {e} in {text:?}"))?;
        ensure(back == inv, || format!("case {i}: {back:?} != {inv:?}"))?;
    }
    let took = within(start, Duration::from_secs(1))?;
    Ok(format!("1000 invocations, 0 failures, {took:.2?}"))
}

// ---- loop termination ----

fn random_reply(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..6) {
        0 | 1 => {
            let (a, b): (u32, u32) = (rng.random_range(0..1000), rng.random_range(0..1000));
            let op = *['+', '-', '*', '/'].choose(rng).unwrap();
            serialize_invocation(&ActionInvocation::new("Calculator").with("expression", format!("{a}{op}{b}")))
        }
        2 => serialize_invocation(&ActionInvocation::new("Think").with("response", random_text(rng))),
        3 => serialize_invocation(&ActionInvocation::new("Teleport").with("to", "Mars")),
        4 => random_text(rng),
        _ => serialize_invocation(&ActionInvocation::finish(random_text(rng))),
    }
}

fn loop_termination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut completed = 0;
    for case in 0..200 {
        let max_steps = rng.random_range(1..=8);
        let n = rng.random_range(0..30);
        let replies: Vec<String> = (0..n).map(|_| random_reply(&mut rng)).collect();
        let mut actions = ActionRegistry::new();
        actions.register(CalculatorAction).unwrap();
        actions.register(ThinkAction).unwrap();
        let mut agent = Agent::new(
            AgentProfile::new("worker", "does arithmetic").unwrap(),
            actions,
            Arc::new(ScriptedBackend::queue(replies)),
        )
        .unwrap()
        .with_max_steps(max_steps)
        .unwrap();
        let task = TaskPackage::new("compute", "User", "worker").unwrap();
        let id = task.task_id.clone();
        let done = agent.execute(task);
        let chain = agent.memory().recall(&id);
        ensure(done.completion.is_terminal(), || format!("case {case}: not terminal"))?;
        ensure(chain.len() <= max_steps, || format!("case {case}: {} steps > {max_steps}", chain.len()))?;
        let last_finish = chain.last().is_some_and(|s| s.invocation.action_name == FINISH);
        ensure((done.completion == CompletionStatus::Completed) == last_finish, || {
            format!("case {case}: status {} but last step finish = {last_finish}", done.completion)
        })?;
        completed += usize::from(last_finish);
    }
    let took = within(start, Duration::from_secs(5))?;
    Ok(format!("200 backends, {completed} completed, {took:.2?}"))
}

// ---- orchestration ----

const MEMBERS: [&str; 3] = ["alpha", "beta", "gamma"];

fn finish(answer: &str) -> String {
    serialize_invocation(&ActionInvocation::finish(answer))
}

fn delegation(member: &str, instruction: &str) -> String {
    serialize_invocation(&ActionInvocation::new(member).with(TASK_PARAM, instruction))
}

fn team_member(name: &str) -> Agent {
    let backend = match name {
        "alpha" => ScriptedBackend::triggers([("", finish("yes"))]),
        "beta" => ScriptedBackend::triggers([
            ("Observation: OK", finish("agreed")),
            ("", serialize_invocation(&ActionInvocation::new("Think").with("response", "hmm"))),
        ]),
        _ => ScriptedBackend::triggers([("", "no action here".to_string())]),
    };
    let mut actions = ActionRegistry::new();
    actions.register(ThinkAction).unwrap();
    Agent::new(AgentProfile::new(name, "team member").unwrap(), actions, Arc::new(backend))
        .unwrap()
        .with_max_steps(3)
        .unwrap()
}

/// Parent of every task: the running task of its creator at creation time.
/// Also checks that tasks nest properly and steps belong to the innermost
/// running task.
fn lineage(records: &[TraceRecord]) -> Result<HashMap<String, Option<String>>, String> {
    let mut running: Vec<(String, String)> = Vec::new();
    let mut parent = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        match r.event {
            TraceEvent::TaskCreated => {
                let creator = r.creator.as_deref().ok_or(format!("record {i}: no creator"))?;
                let p = if creator == "User" {
                    None
                } else {
                    let (id, _) = running
                        .iter()
                        .rev()
                        .find(|(_, exec)| exec == creator)
                        .ok_or(format!("record {i}: {creator} is not running a task"))?;
                    Some(id.clone())
                };
                if parent.insert(r.task_id.clone(), p).is_some() {
                    return Err(format!("record {i}: task created twice"));
                }
                running.push((r.task_id.clone(), r.executor.clone().unwrap_or_default()));
            }
            TraceEvent::TaskFinished => {
                ensure(running.last().is_some_and(|(id, _)| *id == r.task_id), || {
                    format!("record {i}: finished task is not the innermost one")
                })?;
                running.pop();
            }
            TraceEvent::Step => {
                ensure(
                    running.last().is_some_and(|(id, exec)| *id == r.task_id && *exec == r.agent),
                    || format!("record {i}: step outside the innermost task"),
                )?;
            }
        }
    }
    ensure(running.is_empty(), || "unfinished tasks at the end".into())?;
    Ok(parent)
}

fn depth(parent: &HashMap<String, Option<String>>, id: &str) -> usize {
    match &parent[id] {
        None => 0,
        Some(p) => 1 + depth(parent, p),
    }
}

fn sequential_orchestration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let mut delegated = 0;
    for case in 0..50 {
        let max_steps = rng.random_range(1..=8);
        let script: Vec<String> = (0..rng.random_range(0..12))
            .map(|i| match rng.random_range(0..8) {
                0 => finish("done"),
                1 => delegation("omega", "hello"),
                _ => delegation(MEMBERS[rng.random_range(0..3)], &format!("subtask {i}")),
            })
            .collect();
        let base = Agent::new(
            AgentProfile::new("lead", "coordinates the team").unwrap(),
            ActionRegistry::new(),
            Arc::new(ScriptedBackend::queue(script)),
        )
        .unwrap()
        .with_max_steps(max_steps)
        .unwrap();
        let mut lead = ManagerAgent::with_team(base, MEMBERS.map(|n| Box::new(team_member(n)) as Box<_>)).unwrap();
        let root = TaskPackage::new("poll the team", "User", "lead").unwrap();
        let root_id = root.task_id.clone();
        let trace = Trace::new();
        trace.task_created(&root);
        let done = lead.execute_traced(root, &trace);
        ensure(done.completion.is_terminal(), || format!("case {case}: not terminal"))?;

        let records = trace.records();
        let parent = lineage(&records).map_err(|e| format!("case {case}: {e}"))?;
        for (id, p) in &parent {
            let ok = if *id == root_id { p.is_none() } else { p.as_deref() == Some(root_id.as_str()) };
            ensure(ok, || format!("case {case}: task {id} is not under the user task"))?;
        }
        let created: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.event == TraceEvent::TaskCreated && r.creator.as_deref() == Some("lead"))
            .map(|(i, _)| i)
            .collect();
        ensure(created.len() <= max_steps, || format!("case {case}: too many sub-tasks"))?;
        ensure(created.len() == lead.sub_tasks().len(), || format!("case {case}: sub-task count"))?;
        for (w, sub) in created.windows(2).zip(lead.sub_tasks()) {
            let finished = records
                .iter()
                .position(|r| r.event == TraceEvent::TaskFinished && r.task_id == sub.task_id)
                .ok_or(format!("case {case}: sub-task never finished"))?;
            ensure(finished < w[1], || format!("case {case}: sub-task overlaps the next"))?;
        }
        for sub in lead.sub_tasks() {
            ensure(sub.completion.is_terminal() && MEMBERS.contains(&sub.executor.as_str()), || {
                format!("case {case}: bad sub-task {sub:?}")
            })?;
        }
        delegated += created.len();
    }
    let took = within(start, Duration::from_secs(5))?;
    Ok(format!("50 scripts, {delegated} sub-tasks, {took:.2?}"))
}

// ---- depth-2 hierarchy ----

fn hierarchy_run() -> Result<(TaskPackage, Vec<TraceRecord>), String> {
    let plan = load_plan(&configs().join("hierarchy.toml")).map_err(|e| e.to_string())?;
    let mut root = build_root(&plan, stdio_console()).map_err(|e| format!("{e:#}"))?;
    let task = TaskPackage::new("Write a short priced summary.", "User", &root.profile().name).unwrap();
    let trace = Trace::new();
    trace.task_created(&task);
    let done = root.execute_traced(task, &trace);
    Ok((done, trace.records()))
}

fn depth_two_hierarchy() -> Outcome {
    let (a, records_a) = hierarchy_run()?;
    let (_, records_b) = hierarchy_run()?;
    ensure(a.completion == CompletionStatus::Completed, || format!("run ended {}", a.completion))?;
    let parent = lineage(&records_a)?;
    let deepest = parent.keys().map(|id| depth(&parent, id)).max().unwrap_or(0);
    ensure(deepest == 2, || format!("nesting depth {deepest}, expected 2"))?;
    let (va, vb) = (replay_view(&records_a), replay_view(&records_b));
    ensure(va == vb, || "the two runs' traces differ".into())?;
    Ok(format!("{} trace records, depth {deepest}, replays equal", va.len()))
}

// ---- metric oracle ----

fn oracle_tokens(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| !"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~".contains(*c))
        .collect();
    cleaned
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .map(str::to_string)
        .collect()
}

fn oracle_f1(pred: &str, gold: &str) -> f64 {
    let (p, g) = (oracle_tokens(pred), oracle_tokens(gold));
    if p.is_empty() || g.is_empty() {
        return if p.is_empty() && g.is_empty() { 1.0 } else { 0.0 };
    }
    let mut used = vec![false; g.len()];
    let mut same = 0usize;
    for tp in &p {
        if let Some(j) = (0..g.len()).find(|&j| !used[j] && g[j] == *tp) {
            used[j] = true;
            same += 1;
        }
    }
    if same == 0 {
        return 0.0;
    }
    let (precision, recall) = (same as f64 / p.len() as f64, same as f64 / g.len() as f64);
    2.0 * precision * recall / (precision + recall)
}

fn random_phrase(rng: &mut ChaCha8Rng) -> String {
    const WORDS: &[&str] = &[
        "the", "The", "a", "AN", "Paris", "paris.", "Golden", "gate", "Gate!", "1937", "river", "(Seine)",
        "don't", "é", "Côte", "orange,", "", "the.", "bridge",
    ];
    const SEPS: &[&str] = &[" ", "  ", "\t", "\n", ", "];
    let n = rng.random_range(0..8);
    (0..n)
        .map(|_| format!("{}{}", WORDS.choose(rng).unwrap(), SEPS.choose(rng).unwrap()))
        .collect()
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut partial = 0;
    for case in 0..200 {
        let (p, g) = (random_phrase(&mut rng), random_phrase(&mut rng));
        let (f1, em) = (f1_score(&p, &g), exact_match(&p, &g));
        let expected_em = if oracle_tokens(&p) == oracle_tokens(&g) { 1.0 } else { 0.0 };
        let ctx = || format!("case {case}: {p:?} vs {g:?}");
        ensure((f1 - oracle_f1(&p, &g)).abs() <= 1e-12, || format!("{}: f1 {f1}", ctx()))?;
        ensure(em == expected_em, || format!("{}: em {em}", ctx()))?;
        ensure((0.0..=1.0).contains(&f1), || format!("{}: f1 out of range", ctx()))?;
        ensure(em == 0.0 || f1 == 1.0, || format!("{}: EM without F1 = 1", ctx()))?;
        ensure((f1 - f1_score(&g, &p)).abs() <= 1e-12, || format!("{}: asymmetric", ctx()))?;
        partial += usize::from(f1 > 0.0 && f1 < 1.0);
    }
    Ok(format!("200 pairs, {partial} with partial overlap"))
}

// ---- bench sanity ----

fn report(suite: Suite, backend: BackendChoice) -> Result<BenchReport, String> {
    bench_report(&BenchRequest::new(suite, backend), &Trace::disabled())
}

fn qa_sanity() -> Outcome {
    let start = Instant::now();
    let gold = report(Suite::Qa, BackendChoice::Gold)?;
    ensure(gold.items.len() == 20, || format!("{} items", gold.items.len()))?;
    for d in Difficulty::ALL {
        ensure(gold.split(d).is_some(), || format!("no {d} row"))?;
    }
    for row in &gold.rows {
        ensure(row.f1 == Some(1.0) && row.em == Some(1.0), || format!("gold row {row:?}"))?;
    }
    let empty = report(Suite::Qa, BackendChoice::Empty)?;
    for row in &empty.rows {
        ensure(row.em == Some(0.0), || format!("empty row {row:?}"))?;
    }
    let took = within(start, Duration::from_secs(10))?;
    Ok(format!("gold F1 = EM = 1.0 on {} rows, empty EM 0.0, {took:.2?}", gold.rows.len()))
}

fn shop_sanity() -> Outcome {
    let start = Instant::now();
    let gold = report(Suite::Shop, BackendChoice::Gold)?;
    ensure(gold.items.len() == 12, || format!("{} items", gold.items.len()))?;
    for row in &gold.rows {
        ensure(row.reward == Some(1.0), || format!("gold row {row:?}"))?;
    }
    let affected: HashSet<usize> = bundled_shop_gold()
        .iter()
        .filter(|s| s.over_budget.is_some())
        .map(|s| s.item)
        .collect();
    ensure(!affected.is_empty(), || "no over-budget scripts".into())?;
    let over = report(Suite::Shop, BackendChoice::Overbudget)?;
    for item in &over.items {
        let want = if affected.contains(&item.index) { 0.0 } else { 1.0 };
        ensure(item.reward == Some(want), || format!("item {}: reward {:?}, want {want}", item.index, item.reward))?;
        if affected.contains(&item.index) {
            ensure(item.purchased.is_some(), || format!("item {}: nothing bought", item.index))?;
        }
    }
    let took = within(start, Duration::from_secs(10))?;
    Ok(format!("gold reward 1.0 on {} rows, {} over-budget items 0.0, {took:.2?}", gold.rows.len(), affected.len()))
}

// ---- calculator ----

enum Expr {
    Int(u32),
    Dec(u32, u32, usize),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
}

fn gen_expr(rng: &mut ChaCha8Rng, budget: u32) -> Expr {
    if budget == 0 || rng.random_bool(0.3) {
        return if rng.random_bool(0.8) {
            Expr::Int(rng.random_range(0..1000))
        } else {
            let w = rng.random_range(1..4);
            Expr::Dec(rng.random_range(0..100), rng.random_range(0..10u32.pow(w as u32)), w)
        };
    }
    if rng.random_bool(0.1) {
        return Expr::Neg(Box::new(gen_expr(rng, budget - 1)));
    }
    let op = *['+', '-', '*', '/'].choose(rng).unwrap();
    Expr::Bin(op, Box::new(gen_expr(rng, budget - 1)), Box::new(gen_expr(rng, budget - 1)))
}

fn eval_expr(e: &Expr) -> Option<BigRational> {
    Some(match e {
        Expr::Int(n) => BigRational::from_integer(BigInt::from(*n)),
        Expr::Dec(i, f, w) => {
            let scale = BigInt::from(10u32).pow(*w as u32);
            BigRational::new(BigInt::from(*i) * &scale + BigInt::from(*f), scale)
        }
        Expr::Neg(x) => -eval_expr(x)?,
        Expr::Bin(op, l, r) => {
            let (a, b) = (eval_expr(l)?, eval_expr(r)?);
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                _ if b.is_zero() => return None,
                _ => a / b,
            }
        }
    })
}

/// Fully parenthesized, so the text does not depend on precedence rules.
fn show_expr(e: &Expr) -> String {
    match e {
        Expr::Int(n) => n.to_string(),
        Expr::Dec(i, f, w) => format!("{i}.{f:0w$}"),
        Expr::Neg(x) => format!("-({})", show_expr(x)),
        Expr::Bin(op, l, r) => format!("({} {op} {})", show_expr(l), show_expr(r)),
    }
}

fn calculator_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut by_zero = 0;
    for case in 0..1000 {
        let e = gen_expr(&mut rng, 4);
        let text = show_expr(&e);
        match eval_expr(&e) {
            Some(v) => ensure(evaluate(&text) == Ok(v.clone()), || {
                format!("case {case}: {text} gave {:?}, want {v}", evaluate(&text))
            })?,
            None => {
                by_zero += 1;
                ensure(evaluate(&text) == Err(CalcError::DivisionByZero), || {
                    format!("case {case}: {text} should divide by zero")
                })?
            }
        }
    }
    let mut registry = ActionRegistry::new();
    registry.register(CalculatorAction).unwrap();
    let obs = registry.execute(&ActionInvocation::new("Calculator").with("expression", "75*34+12"));
    ensure(obs == "2562", || format!("75*34+12 gave {obs:?}"))?;
    Ok(format!("1000 expressions ({by_zero} divide by zero), 75*34+12 = {obs}"))
}

// ---- HTTP backend ----

fn http_agent(server: &StubServer, timeout_s: f64) -> Agent {
    let cfg = LlmConfig {
        endpoint: server.base_url(),
        api_key_env: "TROUPE_ACCEPTANCE_UNSET_KEY".into(),
        temperature: 0.3,
        max_tokens: 123,
        timeout_s,
        ..LlmConfig::new("stub-model")
    };
    let backend: Arc<dyn Backend> = Arc::new(HttpBackend::new(cfg).unwrap());
    let mut actions = ActionRegistry::new();
    actions.register(CalculatorAction).unwrap();
    Agent::new(AgentProfile::new("math_agent", "solves arithmetic").unwrap(), actions, backend).unwrap()
}

fn http_conformance() -> Outcome {
    let server = StubServer::start(vec![StubResponse::chat(&finish("4"))]);
    let mut agent = http_agent(&server, 2.0);
    let task = TaskPackage::new("What is 2+2?", "User", "math_agent").unwrap();
    let expected = compose_prompt(&PromptTemplate::default(), agent.profile(), &agent.action_specs(), &[], &task, &[])
        .map_err(|e| e.to_string())?;
    let done = agent.execute(task);
    ensure(done.completion == CompletionStatus::Completed && done.answer == "4", || format!("{done:?}"))?;
    let requests = server.requests();
    ensure(requests.len() == 1, || format!("{} requests", requests.len()))?;
    let body = requests[0].json();
    ensure(body["model"] == "stub-model", || format!("model {}", body["model"]))?;
    ensure(body["temperature"] == 0.3, || format!("temperature {}", body["temperature"]))?;
    ensure(body["max_tokens"] == 123, || format!("max_tokens {}", body["max_tokens"]))?;
    ensure(body["messages"][1]["role"] == "user", || "second message is not the user's".into())?;
    ensure(body["messages"][1]["content"] == expected.user.as_str(), || "user message differs from the prompt".into())?;
    ensure(body["messages"][0]["content"] == expected.system.as_str(), || "system message differs".into())?;

    let server = StubServer::start(vec![StubResponse::status(503, "overloaded")]);
    let done = http_agent(&server, 2.0).execute(TaskPackage::new("2+2", "User", "math_agent").unwrap());
    ensure(done.completion == CompletionStatus::Failed, || format!("5xx gave {}", done.completion))?;
    ensure(done.answer.starts_with("Backend failure"), || format!("5xx answer {:?}", done.answer))?;

    let server = StubServer::start(vec![StubResponse::chat(&finish("4")).delayed(Duration::from_millis(1500))]);
    let started = Instant::now();
    let done = http_agent(&server, 0.3).execute(TaskPackage::new("2+2", "User", "math_agent").unwrap());
    ensure(done.completion == CompletionStatus::Failed, || format!("timeout gave {}", done.completion))?;
    ensure(done.answer.starts_with("Backend failure"), || format!("timeout answer {:?}", done.answer))?;
    ensure(started.elapsed() < Duration::from_millis(1400), || "timeout was not enforced".into())?;
    Ok("prompt, model, temperature and max_tokens sent; 503 and timeout fail the task".into())
}

// ---- copilot REPL ----

fn chat_session(lines: &[&str]) -> Result<(i32, Vec<String>, Vec<String>), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let trace_path = dir.path().join("chat.jsonl");
    let console = Arc::new(ScriptedConsole::new(lines.iter().copied()));
    let mut err = Vec::new();
    let code = cmd_chat(&configs().join("math.toml"), Some(&trace_path), console.clone(), &mut err);
    ensure(err.is_empty(), || String::from_utf8_lossy(&err).into_owned())?;
    let text = std::fs::read_to_string(&trace_path).map_err(|e| e.to_string())?;
    let records = troupe::trace::parse_jsonl(&text).map_err(|e| e.to_string())?;
    Ok((code, console.transcript(), replay_view(&records)))
}

fn copilot_repl() -> Outcome {
    let (code, transcript, view) = chat_session(&["2+2=", "quit"])?;
    ensure(code == EXIT_COMPLETED, || format!("exit {code}"))?;
    let reply = transcript
        .iter()
        .find(|l| l.starts_with("math_agent:"))
        .ok_or(format!("no answer in {transcript:?}"))?;
    ensure(reply.contains('4'), || format!("answer {reply:?}"))?;
    let (_, transcript_again, view_again) = chat_session(&["2+2=", "quit"])?;
    ensure(transcript == transcript_again && view == view_again, || "second session differs".into())?;
    let (code, _, view) = chat_session(&["quit"])?;
    ensure(code == EXIT_COMPLETED && view.is_empty(), || format!("quit path: exit {code}, {} records", view.len()))?;
    Ok(format!("{reply:?}, deterministic, quit exits 0"))
}

// ---- live smoke test ----

fn live_smoke() -> Result<Verdict, String> {
    let Ok(model) = std::env::var("TROUPE_LIVE_MODEL") else {
        return Ok(Verdict::Skip("set TROUPE_LIVE_MODEL (and TROUPE_LIVE_ENDPOINT, TROUPE_LIVE_API_KEY_ENV)".into()));
    };
    let mut cfg = LlmConfig::new(model);
    if let Ok(endpoint) = std::env::var("TROUPE_LIVE_ENDPOINT") {
        cfg.endpoint = endpoint;
    }
    if let Ok(key_env) = std::env::var("TROUPE_LIVE_API_KEY_ENV") {
        cfg.api_key_env = key_env;
    }
    let mut lines = Vec::new();
    for (suite, n) in [(Suite::Qa, 3), (Suite::Shop, 2)] {
        let mut request = BenchRequest::new(suite, BackendChoice::Http);
        request.limit = Some(n);
        request.http = Some(cfg.clone());
        let report = bench_report(&request, &Trace::disabled())?;
        ensure(report.items.len() == n, || format!("{} items", report.items.len()))?;
        ensure(report.items.iter().all(|i| i.status.is_terminal()), || "an item did not terminate".into())?;
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).map_err(|e| e.to_string())?;
        ensure(json["rows"].as_array().is_some_and(|r| !r.is_empty()), || "report has no rows".into())?;
        print!("{}", report.table());
        lines.push(format!("{suite:?} overall {:?}", report.overall()));
    }
    Ok(Verdict::Pass(lines.join("; ")))
}

fn verdict(f: impl FnOnce() -> Outcome) -> Verdict {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(detail)) => Verdict::Pass(detail),
        Ok(Err(reason)) => Verdict::Fail(reason),
        Err(_) => Verdict::Fail("panicked".into()),
    }
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Verdict>)> = vec![
        ("parser round-trip", Box::new(|| verdict(parser_round_trip))),
        ("loop termination and budget", Box::new(|| verdict(loop_termination))),
        ("sequential orchestration", Box::new(|| verdict(sequential_orchestration))),
        ("depth-2 hierarchy", Box::new(|| verdict(depth_two_hierarchy))),
        ("metric oracle equivalence", Box::new(|| verdict(metric_oracle))),
        ("QA harness sanity", Box::new(|| verdict(qa_sanity))),
        ("shop harness sanity", Box::new(|| verdict(shop_sanity))),
        ("calculator fidelity", Box::new(|| verdict(calculator_fidelity))),
        ("HTTP backend conformance", Box::new(|| verdict(http_conformance))),
        ("copilot REPL", Box::new(|| verdict(copilot_repl))),
        (
            "live smoke test",
            Box::new(|| match catch_unwind(live_smoke) {
                Ok(Ok(v)) => v,
                Ok(Err(reason)) => Verdict::Fail(reason),
                Err(_) => Verdict::Fail("panicked".into()),
            }),
        ),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Verdict::Pass(detail) => println!("PASS {name}: {detail}"),
            Verdict::Skip(why) => println!("SKIP {name}: {why}"),
            Verdict::Fail(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
