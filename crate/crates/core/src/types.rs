//! Domain types shared by every layer: task packages, profiles, action
//! descriptions and the steps an agent records while working.

use std::fmt;
use std::sync::atomic::{AtomicI64, Ordering};

use chrono::{DateTime, SecondsFormat, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parameters of an action call, in the order the caller wrote them.
pub type Params = IndexMap<String, String>;

/// Name of the built-in action that ends a task.
pub const FINISH: &str = "Finish";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("illegal transition: task {task_id} is already {from}")]
    IllegalTransition {
        task_id: String,
        from: CompletionStatus,
    },
    #[error("invalid name {0:?}: expected [A-Za-z0-9_]+")]
    InvalidName(String),
}

/// Returns true if `name` matches `[A-Za-z0-9_]+`.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

static LAST_TIMESTAMP_NS: AtomicI64 = AtomicI64::new(i64::MIN);

/// Current UTC time as an RFC 3339 string with nanosecond precision.
///
/// Values handed out by this process are strictly increasing, so two events
/// recorded back to back never share a timestamp and string order equals
/// time order.
pub fn timestamp_now() -> String {
    let wall = Utc::now().timestamp_nanos_opt().unwrap_or(i64::MAX - 1);
    let mut prev = LAST_TIMESTAMP_NS.load(Ordering::Relaxed);
    let issued = loop {
        let next = wall.max(prev.saturating_add(1));
        match LAST_TIMESTAMP_NS.compare_exchange_weak(
            prev,
            next,
            Ordering::AcqRel,
            Ordering::Relaxed,
        ) {
            Ok(_) => break next,
            Err(actual) => prev = actual,
        }
    };
    DateTime::<Utc>::from_timestamp_nanos(issued).to_rfc3339_opts(SecondsFormat::Nanos, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletionStatus {
    Active,
    Completed,
    Failed,
}

impl CompletionStatus {
    pub fn is_terminal(self) -> bool {
        !matches!(self, CompletionStatus::Active)
    }
}

impl fmt::Display for CompletionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompletionStatus::Active => "active",
            CompletionStatus::Completed => "completed",
            CompletionStatus::Failed => "failed",
        })
    }
}

/// The unit of work handed from a creator to an executor.
///
/// A package is only changed through [`TaskPackage::complete`], which
/// consumes it and hands back the terminal version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPackage {
    pub task_id: String,
    pub instruction: String,
    pub completion: CompletionStatus,
    pub creator: String,
    pub timestamp: String,
    pub answer: String,
    pub executor: String,
}

impl TaskPackage {
    /// Creates an active task with a fresh random id.
    pub fn new(
        instruction: impl Into<String>,
        creator: impl Into<String>,
        executor: impl Into<String>,
    ) -> Result<Self, TaskError> {
        let instruction = instruction.into();
        let creator = creator.into();
        let executor = executor.into();
        if instruction.trim().is_empty() {
            return Err(TaskError::InvalidTask("instruction is empty".into()));
        }
        for name in [&creator, &executor] {
            if !is_valid_name(name) {
                return Err(TaskError::InvalidName(name.clone()));
            }
        }
        Ok(TaskPackage {
            task_id: uuid::Uuid::new_v4().simple().to_string(),
            instruction,
            completion: CompletionStatus::Active,
            creator,
            timestamp: timestamp_now(),
            answer: String::new(),
            executor,
        })
    }

    /// Moves an active task to a terminal status, setting its answer.
    pub fn complete(
        self,
        answer: impl Into<String>,
        status: CompletionStatus,
    ) -> Result<Self, TaskError> {
        if self.completion.is_terminal() {
            return Err(TaskError::IllegalTransition {
                task_id: self.task_id,
                from: self.completion,
            });
        }
        if !status.is_terminal() {
            return Err(TaskError::InvalidTask(
                "completion status must be terminal".into(),
            ));
        }
        Ok(TaskPackage {
            completion: status,
            answer: answer.into(),
            ..self
        })
    }

    pub fn is_active(&self) -> bool {
        self.completion == CompletionStatus::Active
    }
}

/// Identity of an agent: used for prompt composition and team registration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub name: String,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<String>,
}

impl AgentProfile {
    pub fn new(name: impl Into<String>, role: impl Into<String>) -> Result<Self, TaskError> {
        let name = name.into();
        if !is_valid_name(&name) {
            return Err(TaskError::InvalidName(name));
        }
        Ok(AgentProfile {
            name,
            role: role.into(),
            constraints: None,
        })
    }

    pub fn with_constraints(mut self, constraints: impl Into<String>) -> Self {
        self.constraints = Some(constraints.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    /// A reasoning step whose observation is synthetic.
    Inner,
    /// A tool or environment call.
    External,
}

/// Self-description of an action, rendered into prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub action_name: String,
    pub action_desc: String,
    pub params_doc: IndexMap<String, String>,
    pub kind: ActionKind,
}

impl ActionSpec {
    pub fn new(
        action_name: impl Into<String>,
        action_desc: impl Into<String>,
        kind: ActionKind,
    ) -> Self {
        ActionSpec {
            action_name: action_name.into(),
            action_desc: action_desc.into(),
            params_doc: IndexMap::new(),
            kind,
        }
    }

    pub fn param(mut self, name: impl Into<String>, doc: impl Into<String>) -> Self {
        self.params_doc.insert(name.into(), doc.into());
        self
    }
}

/// A concrete, parameterized call of an action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionInvocation {
    pub action_name: String,
    #[serde(default)]
    pub params: Params,
}

impl ActionInvocation {
    pub fn new(action_name: impl Into<String>) -> Self {
        ActionInvocation {
            action_name: action_name.into(),
            params: Params::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }

    /// Shorthand for a `Finish` call carrying `response`.
    pub fn finish(response: impl Into<String>) -> Self {
        ActionInvocation::new(FINISH).with("response", response)
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }
}

/// One (invocation, observation) pair in a task's history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionStep {
    pub invocation: ActionInvocation,
    pub observation: String,
    pub step_index: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_task_is_active_with_empty_answer() {
        let task = TaskPackage::new("find the capital of France", "User", "qa_agent").unwrap();
        assert_eq!(task.completion, CompletionStatus::Active);
        assert_eq!(task.answer, "");
        assert_eq!(task.creator, "User");
        assert_eq!(task.executor, "qa_agent");
        assert_eq!(task.task_id.len(), 32);
        assert!(task.task_id.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn empty_instruction_is_rejected() {
        assert!(matches!(
            TaskPackage::new("", "User", "qa_agent"),
            Err(TaskError::InvalidTask(_))
        ));
        assert!(matches!(
            TaskPackage::new("  \n", "User", "qa_agent"),
            Err(TaskError::InvalidTask(_))
        ));
    }

    #[test]
    fn invalid_names_are_rejected() {
        assert!(matches!(
            TaskPackage::new("x", "", "qa_agent"),
            Err(TaskError::InvalidName(_))
        ));
        assert!(matches!(
            TaskPackage::new("x", "User", "qa agent"),
            Err(TaskError::InvalidName(_))
        ));
        assert!(AgentProfile::new("has space", "r").is_err());
        assert!(AgentProfile::new("Painter_agent", "r").is_ok());
    }

    #[test]
    fn task_ids_are_distinct() {
        let a = TaskPackage::new("same", "User", "qa_agent").unwrap();
        let b = TaskPackage::new("same", "User", "qa_agent").unwrap();
        assert_ne!(a.task_id, b.task_id);
        assert!(a.timestamp < b.timestamp);
    }

    #[test]
    fn complete_sets_answer_and_status_only() {
        let task = TaskPackage::new("capital of France?", "User", "qa_agent").unwrap();
        let done = task.clone().complete("Paris", CompletionStatus::Completed).unwrap();
        assert_eq!(done.answer, "Paris");
        assert_eq!(done.completion, CompletionStatus::Completed);
        assert_eq!(done.task_id, task.task_id);
        assert_eq!(done.instruction, task.instruction);
        assert_eq!(done.creator, task.creator);
        assert_eq!(done.executor, task.executor);
        assert_eq!(done.timestamp, task.timestamp);
    }

    #[test]
    fn terminal_tasks_cannot_be_completed_again() {
        let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
        let done = task.complete("Paris", CompletionStatus::Completed).unwrap();
        let err = done.clone().complete("x", CompletionStatus::Completed).unwrap_err();
        assert!(matches!(err, TaskError::IllegalTransition { .. }));
        assert!(done.complete("x", CompletionStatus::Failed).is_err());
    }

    #[test]
    fn failure_may_carry_empty_answer() {
        let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
        let failed = task.complete("", CompletionStatus::Failed).unwrap();
        assert_eq!(failed.completion, CompletionStatus::Failed);
        assert_eq!(failed.answer, "");
    }

    #[test]
    fn completing_to_active_is_rejected() {
        let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
        assert!(task.complete("x", CompletionStatus::Active).is_err());
    }

    #[test]
    fn timestamps_are_strictly_increasing() {
        let stamps: Vec<String> = (0..1000).map(|_| timestamp_now()).collect();
        assert!(stamps.windows(2).all(|w| w[0] < w[1]));
        assert!(stamps[0].ends_with('Z'));
    }
}
