//! The individual-agent loop: compose a prompt from memory, generate,
//! parse, execute, remember; repeat until `Finish` or the step budget runs
//! out.

use std::sync::Arc;

use thiserror::Error;

use crate::actions::{
    parse_invocation, Action, ActionRegistry, FinishAction, ParsePolicy, RegistryError,
};
use crate::llm::{generate, Backend, LlmError};
use crate::memory::AgentMemory;
use crate::prompt::{compose_prompt, FewShotExample, PromptError, PromptTemplate};
use crate::trace::Trace;
use crate::types::{
    ActionInvocation, ActionSpec, AgentProfile, CompletionStatus, ExecutionStep, TaskPackage,
    FINISH,
};

/// Action name recorded when a reply could not be parsed.
pub const INVALID_ACTION: &str = "InvalidAction";

pub const PARSE_FAILURE_OBSERVATION: &str = "Could not parse action.";

pub const DEFAULT_MAX_STEPS: usize = 10;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error("max_steps must be at least 1")]
    ZeroMaxSteps,
    #[error("task {0} is not active")]
    NotActive(String),
}

/// Decides how a parsed invocation is carried out. Plain agents go straight
/// to their registry; managers route team names to delegation first.
pub(crate) trait Dispatch {
    fn dispatch(
        &mut self,
        registry: &ActionRegistry,
        inv: &ActionInvocation,
        task: &TaskPackage,
        trace: &Trace,
    ) -> String;
}

struct RegistryDispatch;

impl Dispatch for RegistryDispatch {
    fn dispatch(
        &mut self,
        registry: &ActionRegistry,
        inv: &ActionInvocation,
        _task: &TaskPackage,
        _trace: &Trace,
    ) -> String {
        registry.execute(inv)
    }
}

pub struct Agent {
    profile: AgentProfile,
    registry: ActionRegistry,
    backend: Arc<dyn Backend>,
    memory: AgentMemory,
    examples: Vec<FewShotExample>,
    max_steps: usize,
    parse_policy: ParsePolicy,
    template: PromptTemplate,
}

impl Agent {
    /// Builds an agent; `Finish` is registered if the registry lacks it.
    pub fn new(
        profile: AgentProfile,
        mut registry: ActionRegistry,
        backend: Arc<dyn Backend>,
    ) -> Result<Self, AgentError> {
        if !registry.contains(FINISH) {
            registry.register(FinishAction)?;
        }
        Ok(Agent {
            profile,
            registry,
            backend,
            memory: AgentMemory::new(),
            examples: Vec::new(),
            max_steps: DEFAULT_MAX_STEPS,
            parse_policy: ParsePolicy::default(),
            template: PromptTemplate::default(),
        })
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Result<Self, AgentError> {
        if max_steps == 0 {
            return Err(AgentError::ZeroMaxSteps);
        }
        self.max_steps = max_steps;
        Ok(self)
    }

    pub fn with_examples(mut self, examples: Vec<FewShotExample>) -> Self {
        self.examples = examples;
        self
    }

    pub fn with_parse_policy(mut self, policy: ParsePolicy) -> Self {
        self.parse_policy = policy;
        self
    }

    pub fn with_template(mut self, template: PromptTemplate) -> Self {
        self.template = template;
        self
    }

    /// Adds one more action, e.g. `Think` to turn a plain actor into ReAct.
    pub fn add_action(&mut self, action: impl Action + 'static) -> Result<(), AgentError> {
        self.registry.register(action)?;
        Ok(())
    }

    pub fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    pub fn name(&self) -> &str {
        &self.profile.name
    }

    pub fn registry(&self) -> &ActionRegistry {
        &self.registry
    }

    pub(crate) fn registry_mut(&mut self) -> &mut ActionRegistry {
        &mut self.registry
    }

    pub fn memory(&self) -> &AgentMemory {
        &self.memory
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn action_specs(&self) -> Vec<ActionSpec> {
        self.registry.specs().cloned().collect()
    }

    /// Runs one step of `task` and returns the remembered step.
    pub fn step(&mut self, task: &TaskPackage) -> Result<ExecutionStep, AgentError> {
        self.step_with(task, &Trace::disabled(), &mut RegistryDispatch)
    }

    /// Runs `task` to completion without tracing.
    pub fn execute(&mut self, task: TaskPackage) -> TaskPackage {
        self.execute_traced(task, &Trace::disabled())
    }

    pub fn execute_traced(&mut self, task: TaskPackage, trace: &Trace) -> TaskPackage {
        self.run(task, trace, &mut RegistryDispatch)
    }

    pub(crate) fn step_with(
        &mut self,
        task: &TaskPackage,
        trace: &Trace,
        dispatch: &mut dyn Dispatch,
    ) -> Result<ExecutionStep, AgentError> {
        if !task.is_active() {
            return Err(AgentError::NotActive(task.task_id.clone()));
        }
        let specs = self.action_specs();
        let prompt = compose_prompt(
            &self.template,
            &self.profile,
            &specs,
            &self.examples,
            task,
            self.memory.recall(&task.task_id),
        )?;

        let mut parsed = None;
        let mut last_raw = String::new();
        for attempt in 0..=self.parse_policy.max_retries {
            let raw = if attempt == 0 {
                generate(self.backend.as_ref(), &prompt)?
            } else {
                let retry = prompt.with_reminder(&self.parse_policy.reminder_text);
                generate(self.backend.as_ref(), &retry)?
            };
            match parse_invocation(&raw) {
                Ok(inv) => {
                    parsed = Some(inv);
                    break;
                }
                Err(_) => last_raw = raw,
            }
        }

        let (invocation, observation) = match parsed {
            None => (
                ActionInvocation::new(INVALID_ACTION).with("raw", last_raw),
                PARSE_FAILURE_OBSERVATION.to_string(),
            ),
            Some(inv) => {
                let mut obs = dispatch.dispatch(&self.registry, &inv, task, trace);
                if inv.action_name == FINISH && inv.param("response").is_none() {
                    obs.push_str(" Note: Finish was called without a response.");
                }
                (inv, obs)
            }
        };
        let step = self
            .memory
            .remember(&task.task_id, invocation, observation);
        trace.step(&task.task_id, &self.profile.name, &step);
        Ok(step)
    }

    pub(crate) fn run(
        &mut self,
        task: TaskPackage,
        trace: &Trace,
        dispatch: &mut dyn Dispatch,
    ) -> TaskPackage {
        if !task.is_active() {
            return task;
        }
        let mut outcome = (String::new(), CompletionStatus::Failed);
        for _ in 0..self.max_steps {
            match self.step_with(&task, trace, dispatch) {
                Ok(step) if step.invocation.action_name == FINISH => {
                    let answer = step.invocation.param("response").unwrap_or("").to_string();
                    outcome = (answer, CompletionStatus::Completed);
                    break;
                }
                Ok(_) => {}
                Err(AgentError::Backend(err)) => {
                    outcome = (format!("Backend failure: {err}"), CompletionStatus::Failed);
                    break;
                }
                Err(err) => {
                    outcome = (format!("Agent error: {err}"), CompletionStatus::Failed);
                    break;
                }
            }
        }
        let done = task
            .complete(outcome.0, outcome.1)
            .expect("task was checked active");
        trace.task_finished(&done);
        done
    }
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent")
            .field("profile", &self.profile)
            .field("registry", &self.registry)
            .field("max_steps", &self.max_steps)
            .finish_non_exhaustive()
    }
}
