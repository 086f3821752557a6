use std::collections::HashMap;

use crate::types::{ActionInvocation, ExecutionStep};

/// Per-task, append-only action/observation chains of one agent.
#[derive(Debug, Clone, Default)]
pub struct AgentMemory {
    chains: HashMap<String, Vec<ExecutionStep>>,
}

impl AgentMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn remember(
        &mut self,
        task_id: &str,
        invocation: ActionInvocation,
        observation: impl Into<String>,
    ) -> ExecutionStep {
        let chain = self.chains.entry(task_id.to_string()).or_default();
        let step = ExecutionStep {
            invocation,
            observation: observation.into(),
            step_index: chain.len(),
        };
        chain.push(step.clone());
        step
    }

    /// The full chain for `task_id`; empty for unknown tasks.
    pub fn recall(&self, task_id: &str) -> &[ExecutionStep] {
        self.chains.get(task_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &str> {
        self.chains.keys().map(String::as_str)
    }
}
