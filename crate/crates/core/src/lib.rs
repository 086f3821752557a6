//! Task-oriented LLM agents.
//!
//! An [`Agent`] owns a profile, a registry of actions, a generation backend
//! and a memory of action/observation chains. Each step composes a prompt,
//! asks the backend for one action, executes it and remembers the result,
//! until the agent calls `Finish` or runs out of steps.
//!
//! A [`ManagerAgent`] turns the members of its team into actions: calling
//! one delegates a [`TaskPackage`] and waits for the answer. Managers can be
//! team members of other managers.
//!
//! ```
//! use std::sync::Arc;
//! use troupe::{Agent, ActionRegistry, AgentProfile, ScriptedBackend, TaskPackage, ThinkAction};
//!
//! let backend = Arc::new(ScriptedBackend::queue([
//!     "Action: Think\nAction Input: {\"response\": \"France's capital is Paris\"}",
//!     "Action: Finish\nAction Input: {\"response\": \"Paris\"}",
//! ]));
//! let mut actions = ActionRegistry::new();
//! actions.register(ThinkAction).unwrap();
//! let profile = AgentProfile::new("qa_agent", "answers geography questions").unwrap();
//! let mut agent = Agent::new(profile, actions, backend).unwrap();
//!
//! let task = TaskPackage::new("What is the capital of France?", "User", "qa_agent").unwrap();
//! let done = agent.execute(task);
//! assert_eq!(done.answer, "Paris");
//! ```

pub mod actions;
pub mod agent;
pub mod bench;
pub mod llm;
pub mod manager;
pub mod memory;
pub mod prompt;
pub mod testing;
pub mod trace;
pub mod types;

pub use actions::{
    parse_invocation, serialize_invocation, Action, ActionError, ActionRegistry,
    CalculatorAction, Console, FinishAction, HumanInputAction, ParsePolicy, PlanAction,
    ThinkAction,
};
pub use agent::{Agent, AgentError};
pub use llm::{Backend, HttpBackend, LlmConfig, LlmError, ScriptedBackend};
pub use manager::{HumanAgent, ManagerAgent, ManagerError, TeamMember};
pub use memory::AgentMemory;
pub use prompt::{compose_prompt, FewShotExample, Prompt, PromptTemplate, Section};
pub use trace::{Trace, TraceEvent, TraceRecord};
pub use types::{
    ActionInvocation, ActionKind, ActionSpec, AgentProfile, CompletionStatus, ExecutionStep,
    Params, TaskError, TaskPackage, FINISH,
};
