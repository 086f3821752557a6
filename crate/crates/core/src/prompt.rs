//! Prompt composition.
//!
//! A prompt is a list of sections rendered in template order. Sections that
//! describe the agent (role, instructions, constraints, action docs and
//! examples) form the system message; sections that describe the current
//! task (history, task text and the format reminder) form the user message.
//! Section headers:
//!
//! | section          | header                |
//! |------------------|-----------------------|
//! | RoleDescription  | `## Role`             |
//! | Instructions     | `## Instructions`     |
//! | Constraints      | `## Constraints`      |
//! | ActionDocs       | `## Actions`          |
//! | FewShotExamples  | `## Examples`         |
//! | History          | `## Previous steps`   |
//! | CurrentTask      | `## Task`             |
//! | FormatReminder   | `## Response format`  |
//!
//! Empty sections (no constraints, no examples, no history yet) are left out.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::serialize_invocation;
use crate::types::{ActionInvocation, ActionSpec, AgentProfile, ExecutionStep, TaskPackage, FINISH};

pub const ROLE_HEADER: &str = "## Role";
pub const INSTRUCTIONS_HEADER: &str = "## Instructions";
pub const CONSTRAINTS_HEADER: &str = "## Constraints";
pub const ACTIONS_HEADER: &str = "## Actions";
pub const EXAMPLES_HEADER: &str = "## Examples";
pub const HISTORY_HEADER: &str = "## Previous steps";
pub const TASK_HEADER: &str = "## Task";
pub const FORMAT_HEADER: &str = "## Response format";

pub const DEFAULT_INSTRUCTIONS: &str = "Solve the task step by step. At each step choose exactly \
one of the actions listed below. After every action you will receive an observation. When you \
know the answer, call Finish with your final response.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("no actions to document")]
    EmptyRegistry,
    #[error("action {0:?} is listed twice")]
    DuplicateAction(String),
    #[error("the Finish action is missing")]
    MissingFinish,
    #[error("few-shot example must end with a Finish step")]
    ExampleWithoutFinish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Section {
    RoleDescription,
    Instructions,
    Constraints,
    ActionDocs,
    FewShotExamples,
    History,
    CurrentTask,
    FormatReminder,
}

impl Section {
    pub const ALL: [Section; 8] = [
        Section::RoleDescription,
        Section::Instructions,
        Section::Constraints,
        Section::ActionDocs,
        Section::FewShotExamples,
        Section::History,
        Section::CurrentTask,
        Section::FormatReminder,
    ];

    /// Whether the section goes to the user message rather than the system one.
    pub fn is_task_specific(self) -> bool {
        matches!(
            self,
            Section::History | Section::CurrentTask | Section::FormatReminder
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub sections: Vec<Section>,
    #[serde(default = "default_instructions")]
    pub instructions: String,
}

fn default_instructions() -> String {
    DEFAULT_INSTRUCTIONS.to_string()
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            sections: Section::ALL.to_vec(),
            instructions: default_instructions(),
        }
    }
}

impl PromptTemplate {
    pub fn with_sections(sections: Vec<Section>) -> Self {
        PromptTemplate {
            sections,
            ..Default::default()
        }
    }
}

/// A worked example shown to the model; it always ends in `Finish`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub task_text: String,
    pub steps: Vec<(ActionInvocation, String)>,
}

impl FewShotExample {
    pub fn new(
        task_text: impl Into<String>,
        steps: Vec<(ActionInvocation, String)>,
    ) -> Result<Self, PromptError> {
        match steps.last() {
            Some((inv, _)) if inv.action_name == FINISH => Ok(FewShotExample {
                task_text: task_text.into(),
                steps,
            }),
            _ => Err(PromptError::ExampleWithoutFinish),
        }
    }
}

/// A composed prompt, split into the system and user messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    /// The prompt as one string, for single-string backends.
    pub fn text(&self) -> String {
        match (self.system.is_empty(), self.user.is_empty()) {
            (true, _) => self.user.clone(),
            (false, true) => self.system.clone(),
            (false, false) => format!("{}\n\n{}", self.system, self.user),
        }
    }

    pub fn with_reminder(&self, reminder: &str) -> Prompt {
        let user = if self.user.is_empty() {
            reminder.to_string()
        } else {
            format!("{}\n\n{}", self.user, reminder)
        };
        Prompt {
            system: self.system.clone(),
            user,
        }
    }
}

/// One block per action, in the given order.
pub fn render_action_docs(specs: &[ActionSpec]) -> Result<String, PromptError> {
    if specs.is_empty() {
        return Err(PromptError::EmptyRegistry);
    }
    let mut seen = HashSet::new();
    let mut blocks = Vec::with_capacity(specs.len());
    for spec in specs {
        if !seen.insert(spec.action_name.as_str()) {
            return Err(PromptError::DuplicateAction(spec.action_name.clone()));
        }
        let mut block = format!("{}: {}", spec.action_name, spec.action_desc);
        if spec.params_doc.is_empty() {
            block.push_str("\n  (no parameters)");
        }
        for (param, doc) in &spec.params_doc {
            block.push_str(&format!("\n  - {param}: {doc}"));
        }
        blocks.push(block);
    }
    Ok(blocks.join("\n"))
}

/// Alternating `Action:` / `Observation:` lines for a step chain.
pub fn render_history(history: &[ExecutionStep]) -> String {
    history
        .iter()
        .map(|step| {
            format!(
                "{}\nObservation: {}",
                serialize_invocation(&step.invocation),
                step.observation
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn render_examples(examples: &[FewShotExample]) -> String {
    examples
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let mut out = format!("Example {}:\nTask: {}", i + 1, ex.task_text);
            for (inv, obs) in &ex.steps {
                out.push('\n');
                out.push_str(&serialize_invocation(inv));
                out.push_str("\nObservation: ");
                out.push_str(obs);
            }
            out
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn render_format_reminder(specs: &[ActionSpec]) -> String {
    let names: Vec<&str> = specs.iter().map(|s| s.action_name.as_str()).collect();
    format!(
        "Reply with exactly one action in this format and nothing after it:\n\
         Action: <one of {}>\n\
         Action Input: <JSON object with string values, on one line>",
        names.join(", ")
    )
}

/// Builds the prompt for the next step of `task`.
pub fn compose_prompt(
    template: &PromptTemplate,
    profile: &AgentProfile,
    specs: &[ActionSpec],
    examples: &[FewShotExample],
    task: &TaskPackage,
    history: &[ExecutionStep],
) -> Result<Prompt, PromptError> {
    if !specs.iter().any(|s| s.action_name == FINISH) {
        return Err(PromptError::MissingFinish);
    }
    let docs = render_action_docs(specs)?;

    let mut system = Vec::new();
    let mut user = Vec::new();
    for &section in &template.sections {
        let body = match section {
            Section::RoleDescription => Some(format!("You are {}. {}", profile.name, profile.role)),
            Section::Instructions => {
                Some(template.instructions.clone()).filter(|s| !s.trim().is_empty())
            }
            Section::Constraints => profile.constraints.clone().filter(|c| !c.trim().is_empty()),
            Section::ActionDocs => Some(docs.clone()),
            Section::FewShotExamples => {
                Some(render_examples(examples)).filter(|_| !examples.is_empty())
            }
            Section::History => Some(render_history(history)).filter(|_| !history.is_empty()),
            Section::CurrentTask => Some(task.instruction.clone()),
            Section::FormatReminder => Some(render_format_reminder(specs)),
        };
        let Some(body) = body else { continue };
        let header = match section {
            Section::RoleDescription => ROLE_HEADER,
            Section::Instructions => INSTRUCTIONS_HEADER,
            Section::Constraints => CONSTRAINTS_HEADER,
            Section::ActionDocs => ACTIONS_HEADER,
            Section::FewShotExamples => EXAMPLES_HEADER,
            Section::History => HISTORY_HEADER,
            Section::CurrentTask => TASK_HEADER,
            Section::FormatReminder => FORMAT_HEADER,
        };
        let target = if section.is_task_specific() {
            &mut user
        } else {
            &mut system
        };
        target.push(format!("{header}\n{body}"));
    }
    Ok(Prompt {
        system: system.join("\n\n"),
        user: user.join("\n\n"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{Action, CalculatorAction, FinishAction, ThinkAction};

    fn specs() -> Vec<ActionSpec> {
        vec![ThinkAction.spec(), CalculatorAction.spec(), FinishAction.spec()]
    }

    fn profile() -> AgentProfile {
        AgentProfile::new("qa_agent", "You answer questions about geography.").unwrap()
    }

    fn step(i: usize, obs: &str) -> ExecutionStep {
        ExecutionStep {
            invocation: ActionInvocation::new("Think").with("response", format!("thought {i}")),
            observation: obs.to_string(),
            step_index: i,
        }
    }

    #[test]
    fn action_docs_include_name_and_param_docs() {
        let docs = render_action_docs(&[FinishAction.spec()]).unwrap();
        assert!(docs.contains("Finish"));
        assert!(docs.contains("the final answer or result of the task"));
    }

    #[test]
    fn action_docs_guards() {
        assert_eq!(render_action_docs(&[]), Err(PromptError::EmptyRegistry));
        assert_eq!(
            render_action_docs(&[ThinkAction.spec(), ThinkAction.spec()]),
            Err(PromptError::DuplicateAction("Think".into()))
        );
    }

    #[test]
    fn action_docs_keep_input_order() {
        let search = ActionSpec::new("Search", "search", crate::types::ActionKind::External)
            .param("query", "q");
        let docs = render_action_docs(&[ThinkAction.spec(), search]).unwrap();
        assert!(docs.find("Think:").unwrap() < docs.find("Search:").unwrap());
    }

    #[test]
    fn fresh_task_prompt() {
        let task = TaskPackage::new("What is the capital of France?", "User", "qa_agent").unwrap();
        let prompt = compose_prompt(&PromptTemplate::default(), &profile(), &specs(), &[], &task, &[])
            .unwrap();
        let text = prompt.text();
        assert!(text.contains("You answer questions about geography."));
        assert!(text.contains("What is the capital of France?"));
        assert!(!text.contains("Observation:"));
        assert!(!text.contains(HISTORY_HEADER));
        assert!(prompt.system.contains(ACTIONS_HEADER));
        assert!(prompt.user.starts_with(TASK_HEADER));
        assert!(prompt.user.ends_with("on one line>"));
        for spec in specs() {
            assert!(text.contains(&spec.action_name));
        }
    }

    #[test]
    fn composing_is_deterministic() {
        let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
        let history = vec![step(0, "OK")];
        let a = compose_prompt(&PromptTemplate::default(), &profile(), &specs(), &[], &task, &history)
            .unwrap();
        let b = compose_prompt(&PromptTemplate::default(), &profile(), &specs(), &[], &task, &history)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn history_lines_in_step_order() {
        let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
        let history = vec![step(0, "first obs"), step(1, "second obs")];
        let text = compose_prompt(&PromptTemplate::default(), &profile(), &specs(), &[], &task, &history)
            .unwrap()
            .text();
        let obs: Vec<&str> = text.lines().filter(|l| l.starts_with("Observation:")).collect();
        assert_eq!(obs, vec!["Observation: first obs", "Observation: second obs"]);
    }

    #[test]
    fn history_block_grows_by_appending() {
        let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
        let mut history = Vec::new();
        let mut previous = String::new();
        for i in 0..5 {
            history.push(step(i, &format!("obs {i}")));
            let block = render_history(&history);
            assert!(block.starts_with(&previous));
            previous = block;
            let text = compose_prompt(&PromptTemplate::default(), &profile(), &specs(), &[], &task, &history)
                .unwrap()
                .text();
            assert!(text.contains(&previous));
        }
    }

    #[test]
    fn missing_finish_is_rejected() {
        let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
        assert_eq!(
            compose_prompt(&PromptTemplate::default(), &profile(), &[ThinkAction.spec()], &[], &task, &[]),
            Err(PromptError::MissingFinish)
        );
    }

    #[test]
    fn examples_and_constraints_render() {
        let task = TaskPackage::new("q", "User", "qa_agent").unwrap();
        let example = FewShotExample::new(
            "What is 2+2?",
            vec![
                (ActionInvocation::new("Calculator").with("expression", "2+2"), "4".into()),
                (ActionInvocation::finish("4"), "Task completed.".into()),
            ],
        )
        .unwrap();
        let profile = profile().with_constraints("Answer in one word.");
        let prompt = compose_prompt(&PromptTemplate::default(), &profile, &specs(), &[example], &task, &[])
            .unwrap();
        assert!(prompt.system.contains("## Constraints\nAnswer in one word."));
        assert!(prompt.system.contains("Example 1:\nTask: What is 2+2?\nAction: Calculator"));
        assert!(!prompt.user.contains("Example"));
    }

    #[test]
    fn example_must_end_in_finish() {
        assert_eq!(
            FewShotExample::new("t", vec![(ActionInvocation::new("Think"), "OK".into())]),
            Err(PromptError::ExampleWithoutFinish)
        );
        assert_eq!(FewShotExample::new("t", vec![]), Err(PromptError::ExampleWithoutFinish));
    }

    #[test]
    fn custom_section_order() {
        let task = TaskPackage::new("the task text", "User", "qa_agent").unwrap();
        let template = PromptTemplate::with_sections(vec![
            Section::CurrentTask,
            Section::ActionDocs,
            Section::RoleDescription,
        ]);
        let prompt = compose_prompt(&template, &profile(), &specs(), &[], &task, &[]).unwrap();
        assert!(prompt.system.starts_with(ACTIONS_HEADER));
        assert!(prompt.system.contains(ROLE_HEADER));
        assert!(!prompt.system.contains(INSTRUCTIONS_HEADER));
        assert_eq!(prompt.user, "## Task\nthe task text");
    }

    #[test]
    fn reminder_is_appended_to_user_message() {
        let p = Prompt {
            system: "s".into(),
            user: "u".into(),
        };
        assert_eq!(p.with_reminder("again").user, "u\n\nagain");
        assert_eq!(p.text(), "s\n\nu");
    }
}
