//! Actions: what an agent can do, how calls are parsed, and how they are
//! dispatched.
//!
//! Reasoning steps (`Think`, `Plan`) and tool calls share one contract, so a
//! reasoning strategy is just a choice of which actions to register.

mod builtin;
mod calculator;
mod console;
mod grammar;

use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::types::{is_valid_name, ActionInvocation, ActionSpec, Params};

pub use builtin::{
    builtin_action, CalculatorAction, FinishAction, HumanInputAction, PlanAction, ThinkAction,
    BUILTIN_ACTIONS, FINISH_OBSERVATION, INNER_ACTION_OBSERVATION,
};
pub use calculator::{evaluate, format_rational, to_f64, CalcError};
pub use console::{stdio_console, Console, ScriptedConsole, StreamConsole};
pub use grammar::{params_json, parse_invocation, serialize_invocation, ParseError};

/// Failure reported by an action handler. The agent loop turns it into an
/// `Action error: ...` observation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("missing parameter {0:?}")]
    MissingParam(String),
    #[error("{0}")]
    Failed(String),
}

impl From<CalcError> for ActionError {
    fn from(err: CalcError) -> Self {
        ActionError::Failed(err.to_string())
    }
}

impl From<std::io::Error> for ActionError {
    fn from(err: std::io::Error) -> Self {
        ActionError::Failed(err.to_string())
    }
}

pub trait Action: Send + Sync {
    /// Default self-description; the registry may rename it.
    fn spec(&self) -> ActionSpec;

    /// Runs the action and returns its observation.
    fn call(&self, params: &Params) -> Result<String, ActionError>;
}

/// Fetches a required parameter.
pub fn required<'a>(params: &'a Params, key: &str) -> Result<&'a str, ActionError> {
    params
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| ActionError::MissingParam(key.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("action {0:?} is already registered")]
    DuplicateAction(String),
    #[error("invalid action name {0:?}: expected [A-Za-z0-9_]+")]
    InvalidName(String),
    #[error("action {0:?} documents an empty parameter name")]
    EmptyParamName(String),
}

struct Entry {
    spec: ActionSpec,
    handler: Arc<dyn Action>,
}

/// Ordered, name-unique set of actions available to one agent.
#[derive(Default)]
pub struct ActionRegistry {
    entries: IndexMap<String, Entry>,
}

impl ActionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, action: impl Action + 'static) -> Result<(), RegistryError> {
        let handler: Arc<dyn Action> = Arc::new(action);
        let spec = handler.spec();
        self.insert(spec, handler)
    }

    /// Registers `action` under a different name than its own spec uses.
    /// Few-shot examples must use the new name.
    pub fn register_as(
        &mut self,
        name: impl Into<String>,
        action: impl Action + 'static,
    ) -> Result<(), RegistryError> {
        let handler: Arc<dyn Action> = Arc::new(action);
        let mut spec = handler.spec();
        spec.action_name = name.into();
        self.insert(spec, handler)
    }

    pub fn register_shared(&mut self, action: Arc<dyn Action>) -> Result<(), RegistryError> {
        let spec = action.spec();
        self.insert(spec, action)
    }

    fn insert(&mut self, spec: ActionSpec, handler: Arc<dyn Action>) -> Result<(), RegistryError> {
        if !is_valid_name(&spec.action_name) {
            return Err(RegistryError::InvalidName(spec.action_name));
        }
        if spec.params_doc.keys().any(|k| k.is_empty()) {
            return Err(RegistryError::EmptyParamName(spec.action_name));
        }
        if self.entries.contains_key(&spec.action_name) {
            return Err(RegistryError::DuplicateAction(spec.action_name));
        }
        self.entries
            .insert(spec.action_name.clone(), Entry { spec, handler });
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&ActionSpec> {
        self.entries.get(name).map(|e| &e.spec)
    }

    /// Specs in registration order.
    pub fn specs(&self) -> impl Iterator<Item = &ActionSpec> {
        self.entries.values().map(|e| &e.spec)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dispatches `inv` and always produces an observation: unknown names
    /// and handler failures come back as text the agent can react to.
    pub fn execute(&self, inv: &ActionInvocation) -> String {
        match self.entries.get(&inv.action_name) {
            // The action list lives in the prompt; keeping it out of the
            // observation makes traces independent of the registry.
            None => format!(
                "Unknown action: {}. Use one of the actions listed in the prompt.",
                inv.action_name
            ),
            Some(entry) => match entry.handler.call(&inv.params) {
                Ok(obs) => obs,
                Err(err) => format!("Action error: {err}"),
            },
        }
    }
}

impl std::fmt::Debug for ActionRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

/// How the loop reacts to replies that do not parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsePolicy {
    pub max_retries: usize,
    pub reminder_text: String,
}

impl Default for ParsePolicy {
    fn default() -> Self {
        ParsePolicy {
            max_retries: 1,
            reminder_text: "Your previous reply could not be parsed. Reply with exactly one \
                            action: a line \"Action: <action name>\" followed by a line \
                            \"Action Input: <JSON object with string values>\"."
                .to_string(),
        }
    }
}
