//! Runs one fresh agent per benchmark item and aggregates the scores.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use serde::Serialize;

use super::data::QaItem;
use super::metrics::{exact_match, f1_score};
use super::retrieval::{Corpus, WikipediaSearchAction};
use super::shop::{shop_reward, Catalog, SharedSession, ShopClickAction, ShopSearchAction, ShopSession, ShopTask};
use super::{BenchError, Difficulty};
use crate::actions::{ActionRegistry, ThinkAction};
use crate::agent::{Agent, AgentError, DEFAULT_MAX_STEPS};
use crate::llm::Backend;
use crate::prompt::FewShotExample;
use crate::trace::Trace;
use crate::types::{ActionInvocation, AgentProfile, CompletionStatus, TaskPackage};

pub const QA_AGENT: &str = "qa_agent";
pub const SHOP_AGENT: &str = "shop_agent";
pub const BENCH_CREATOR: &str = "Benchmark";

/// Supplies the backend for item `index`.
pub type BackendFactory<'a, T> = dyn Fn(usize, &T) -> Result<Arc<dyn Backend>, String> + Sync + 'a;

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub max_steps: usize,
    /// Worker threads; items are independent so any value gives the same report.
    pub parallelism: usize,
    pub trace: Trace,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            max_steps: DEFAULT_MAX_STEPS,
            parallelism: 1,
            trace: Trace::disabled(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Qa,
    Shop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemResult {
    pub index: usize,
    pub difficulty: Difficulty,
    pub status: CompletionStatus,
    pub answer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purchased: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ItemFailure {
    pub index: usize,
    pub reason: String,
}

/// Mean scores of one split. QA rows carry `f1`/`em`, shop rows `reward`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub split: String,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub suite: Suite,
    /// One row per difficulty present, then `overall`.
    pub rows: Vec<ScoreRow>,
    pub items: Vec<ItemResult>,
    pub failures: Vec<ItemFailure>,
}

impl BenchReport {
    fn build(suite: Suite, items: Vec<ItemResult>, failures: Vec<ItemFailure>) -> Self {
        let mut rows = Vec::new();
        for d in Difficulty::ALL {
            let split: Vec<&ItemResult> = items.iter().filter(|r| r.difficulty == d).collect();
            if !split.is_empty() {
                rows.push(score_row(d.as_str(), &split));
            }
        }
        let all: Vec<&ItemResult> = items.iter().collect();
        rows.push(score_row("overall", &all));
        BenchReport {
            suite,
            rows,
            items,
            failures,
        }
    }

    pub fn overall(&self) -> &ScoreRow {
        self.rows.last().expect("reports always have an overall row")
    }

    pub fn split(&self, difficulty: Difficulty) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| r.split == difficulty.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Aligned text table followed by the failure list.
    pub fn table(&self) -> String {
        let (title, columns): (&str, &[&str]) = match self.suite {
            Suite::Qa => ("QA", &["F1", "EM"]),
            Suite::Shop => ("Shop", &["reward"]),
        };
        let mut out = format!("{title} benchmark ({} items)\n", self.items.len());
        out.push_str(&format!("{:<8} {:>5}", "split", "count"));
        for c in columns {
            out.push_str(&format!(" {c:>7}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<8} {:>5}", row.split, row.count));
            let values = match self.suite {
                Suite::Qa => vec![row.f1, row.em],
                Suite::Shop => vec![row.reward],
            };
            for v in values {
                out.push_str(&format!(" {:>7.3}", v.unwrap_or(0.0)));
            }
            out.push('\n');
        }
        if !self.failures.is_empty() {
            out.push_str(&format!("failures: {}\n", self.failures.len()));
            for f in &self.failures {
                out.push_str(&format!("  #{}: {}\n", f.index, f.reason));
            }
        }
        out
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn score_row(split: &str, items: &[&ItemResult]) -> ScoreRow {
    ScoreRow {
        split: split.to_string(),
        count: items.len(),
        f1: mean(items.iter().map(|r| r.f1)),
        em: mean(items.iter().map(|r| r.em)),
        reward: mean(items.iter().map(|r| r.reward)),
    }
}

fn qa_example() -> FewShotExample {
    FewShotExample::new(
        "Which river flows through the capital of Hungary?",
        vec![
            (
                ActionInvocation::new("WikipediaSearch").with("query", "capital of Hungary"),
                "[1] Budapest: Budapest is the capital of Hungary.".to_string(),
            ),
            (
                ActionInvocation::new("WikipediaSearch").with("query", "Budapest river"),
                "[1] Budapest: The city lies on both banks of the Danube.".to_string(),
            ),
            (
                ActionInvocation::finish("Danube"),
                crate::actions::FINISH_OBSERVATION.to_string(),
            ),
        ],
    )
    .expect("example ends with Finish")
}

/// The question-answering agent: `WikipediaSearch`, `Think`, `Finish`.
pub fn qa_agent(corpus: Arc<Corpus>, backend: Arc<dyn Backend>, max_steps: usize) -> Result<Agent, AgentError> {
    let mut actions = ActionRegistry::new();
    actions.register(WikipediaSearchAction::new(corpus))?;
    actions.register(ThinkAction)?;
    let profile = AgentProfile::new(
        QA_AGENT,
        "You answer questions by searching an encyclopedia, one fact at a time.",
    )
    .expect("constant name is valid")
    .with_constraints("Answer with the shortest phrase that answers the question, not a full sentence.");
    Ok(Agent::new(profile, actions, backend)?
        .with_examples(vec![qa_example()])
        .with_max_steps(max_steps)?)
}

/// The shopping agent: `Search`, `Click`, `Think`, `Finish`, bound to `session`.
pub fn shop_agent(
    catalog: Arc<Catalog>,
    session: SharedSession,
    backend: Arc<dyn Backend>,
    max_steps: usize,
) -> Result<Agent, AgentError> {
    let mut actions = ActionRegistry::new();
    actions.register(ShopSearchAction::new(catalog.clone(), session.clone()))?;
    actions.register(ShopClickAction::new(catalog, session))?;
    actions.register(ThinkAction)?;
    let profile = AgentProfile::new(
        SHOP_AGENT,
        "You shop online for the product described in the instruction.",
    )
    .expect("constant name is valid")
    .with_constraints(
        "Buy exactly one product that has every requested attribute and stays within the price limit, \
         then call Finish.",
    );
    Agent::new(profile, actions, backend)?.with_max_steps(max_steps)
}

/// Calls `run` for every index, on up to `parallelism` threads, and returns
/// the outcomes in index order.
fn run_indexed<R: Send>(n: usize, parallelism: usize, run: impl Fn(usize) -> R + Sync) -> Vec<R> {
    let workers = parallelism.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(run).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..n).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = run(i);
                slots.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|p| p.into_inner())
        .into_iter()
        .map(|r| r.expect("every index ran"))
        .collect()
}

fn failure_reason(done: &TaskPackage) -> Option<String> {
    match done.completion {
        CompletionStatus::Completed => None,
        _ if done.answer.is_empty() => Some("no answer within the step budget".to_string()),
        _ => Some(done.answer.clone()),
    }
}

fn run_task(agent: &mut Agent, instruction: &str, trace: &Trace) -> Result<TaskPackage, String> {
    let task = TaskPackage::new(instruction, BENCH_CREATOR, agent.name()).map_err(|e| e.to_string())?;
    trace.task_created(&task);
    Ok(agent.execute_traced(task, trace))
}

type Outcome = (ItemResult, Option<ItemFailure>);

fn collect(suite: Suite, outcomes: Vec<Outcome>) -> BenchReport {
    let mut items = Vec::new();
    let mut failures = Vec::new();
    for (item, failure) in outcomes {
        items.push(item);
        failures.extend(failure);
    }
    BenchReport::build(suite, items, failures)
}

/// Question answering: F1 and exact match of the final answer. Failed runs
/// score 0.
pub fn run_qa(
    corpus: Arc<Corpus>,
    items: &[QaItem],
    backend_for: &BackendFactory<'_, QaItem>,
    options: &BenchOptions,
) -> Result<BenchReport, BenchError> {
    if items.is_empty() {
        return Err(BenchError::NoItems);
    }
    let outcomes = run_indexed(items.len(), options.parallelism, |i| {
        let item = &items[i];
        let run = backend_for(i, item)
            .and_then(|b| qa_agent(corpus.clone(), b, options.max_steps).map_err(|e| e.to_string()))
            .and_then(|mut agent| run_task(&mut agent, &item.question, &options.trace));
        let (status, answer, failure) = match run {
            Ok(done) => (done.completion, done.answer.clone(), failure_reason(&done)),
            Err(reason) => (CompletionStatus::Failed, String::new(), Some(reason)),
        };
        let (f1, em) = if failure.is_some() {
            (0.0, 0.0)
        } else {
            (f1_score(&answer, &item.answer), exact_match(&answer, &item.answer))
        };
        (
            ItemResult {
                index: i,
                difficulty: item.difficulty,
                status,
                answer,
                purchased: None,
                f1: Some(f1),
                em: Some(em),
                reward: None,
            },
            failure.map(|reason| ItemFailure { index: i, reason }),
        )
    });
    Ok(collect(Suite::Qa, outcomes))
}

/// Shopping: the reward of whatever the agent bought. The session closes
/// when the run ends; failed runs score 0.
pub fn run_shop(
    catalog: Arc<Catalog>,
    tasks: &[ShopTask],
    backend_for: &BackendFactory<'_, ShopTask>,
    options: &BenchOptions,
) -> Result<BenchReport, BenchError> {
    if tasks.is_empty() {
        return Err(BenchError::NoItems);
    }
    let outcomes = run_indexed(tasks.len(), options.parallelism, |i| {
        let task = &tasks[i];
        let session: SharedSession = Arc::new(Mutex::new(ShopSession::new()));
        let run = backend_for(i, task)
            .and_then(|b| {
                shop_agent(catalog.clone(), session.clone(), b, options.max_steps).map_err(|e| e.to_string())
            })
            .and_then(|mut agent| run_task(&mut agent, &task.instruction, &options.trace));
        let mut session = session.lock().unwrap_or_else(|p| p.into_inner()).clone();
        session.close();
        let (status, answer, mut failure) = match run {
            Ok(done) => (done.completion, done.answer.clone(), failure_reason(&done)),
            Err(reason) => (CompletionStatus::Failed, String::new(), Some(reason)),
        };
        let reward = match shop_reward(&session, &catalog, task) {
            Ok(_) if failure.is_some() => 0.0,
            Ok(r) => r,
            Err(e) => {
                failure = Some(e.to_string());
                0.0
            }
        };
        (
            ItemResult {
                index: i,
                difficulty: task.difficulty,
                status,
                answer,
                purchased: session.purchased().map(str::to_string),
                f1: None,
                em: None,
                reward: Some(reward),
            },
            failure.map(|reason| ItemFailure { index: i, reason }),
        )
    });
    Ok(collect(Suite::Shop, outcomes))
}
