use std::sync::Arc;

use super::{calculator, required, Action, ActionError, Console};
use crate::types::{ActionKind, ActionSpec, Params, FINISH};

/// Observation returned by inner (reasoning) actions.
pub const INNER_ACTION_OBSERVATION: &str = "OK";

pub const FINISH_OBSERVATION: &str = "Task completed.";

/// Names accepted by [`builtin_action`].
pub const BUILTIN_ACTIONS: [&str; 5] = [FINISH, "Think", "Plan", "HumanInput", "Calculator"];

/// Reasoning step: the thought itself is the parameter.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThinkAction;

impl Action for ThinkAction {
    fn spec(&self) -> ActionSpec {
        ActionSpec::new(
            "Think",
            "Conduct thinking and reasoning about the task before acting. \
             Use it to combine what you know and decide the next step.",
            ActionKind::Inner,
        )
        .param("response", "this is your thinking response")
    }

    fn call(&self, _params: &Params) -> Result<String, ActionError> {
        Ok(INNER_ACTION_OBSERVATION.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PlanAction;

impl Action for PlanAction {
    fn spec(&self) -> ActionSpec {
        ActionSpec::new(
            "Plan",
            "Lay out a plan of the steps needed to complete the task.",
            ActionKind::Inner,
        )
        .param("response", "this is your plan")
    }

    fn call(&self, _params: &Params) -> Result<String, ActionError> {
        Ok(INNER_ACTION_OBSERVATION.to_string())
    }
}

/// Ends the task; the agent loop reads `response` as the answer.
#[derive(Debug, Clone, Copy, Default)]
pub struct FinishAction;

impl Action for FinishAction {
    fn spec(&self) -> ActionSpec {
        ActionSpec::new(
            FINISH,
            "Complete the task and return the final response.",
            ActionKind::Inner,
        )
        .param("response", "the final answer or result of the task")
    }

    fn call(&self, _params: &Params) -> Result<String, ActionError> {
        Ok(FINISH_OBSERVATION.to_string())
    }
}

/// Asks the person at the console a question.
#[derive(Clone)]
pub struct HumanInputAction {
    console: Arc<dyn Console>,
}

impl HumanInputAction {
    pub fn new(console: Arc<dyn Console>) -> Self {
        HumanInputAction { console }
    }
}

impl Action for HumanInputAction {
    fn spec(&self) -> ActionSpec {
        ActionSpec::new(
            "HumanInput",
            "Obtain instruction from human.",
            ActionKind::External,
        )
        .param("question", "Questions for human.")
    }

    fn call(&self, params: &Params) -> Result<String, ActionError> {
        let question = params.get("question").map(String::as_str).unwrap_or("");
        match self.console.ask(question)? {
            Some(line) => Ok(format!("My instruction is: {line}")),
            None => Err(ActionError::Failed("end of input".into())),
        }
    }
}

/// Exact arithmetic evaluator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CalculatorAction;

impl Action for CalculatorAction {
    fn spec(&self) -> ActionSpec {
        ActionSpec::new(
            "Calculator",
            "Evaluate an arithmetic expression with +, -, *, / and parentheses \
             over decimal numbers. Returns the exact result.",
            ActionKind::External,
        )
        .param("expression", "the arithmetic expression, e.g. 75*34+12")
    }

    fn call(&self, params: &Params) -> Result<String, ActionError> {
        let expr = required(params, "expression")?;
        Ok(calculator::format_rational(&calculator::evaluate(expr)?))
    }
}

/// Builds a built-in action by name. `HumanInput` talks to `console`.
pub fn builtin_action(name: &str, console: &Arc<dyn Console>) -> Option<Arc<dyn Action>> {
    let action: Arc<dyn Action> = match name {
        FINISH => Arc::new(FinishAction),
        "Think" => Arc::new(ThinkAction),
        "Plan" => Arc::new(PlanAction),
        "HumanInput" => Arc::new(HumanInputAction::new(console.clone())),
        "Calculator" => Arc::new(CalculatorAction),
        _ => return None,
    };
    Some(action)
}
