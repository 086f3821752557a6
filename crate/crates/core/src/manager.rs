//! Hierarchical orchestration.
//!
//! A [`ManagerAgent`] runs the ordinary agent loop, but every member of its
//! team is also one of its actions. Calling that action creates a
//! sub-[`TaskPackage`], hands it to the member and waits for the result, so
//! sub-tasks are strictly sequential. Members may themselves be managers.

use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::actions::{Action, ActionError, ActionRegistry, Console, RegistryError};
use crate::agent::{Agent, AgentError, Dispatch};
use crate::trace::Trace;
use crate::types::{
    ActionInvocation, ActionKind, ActionSpec, AgentProfile, CompletionStatus, Params, TaskPackage,
};

/// Parameter a manager fills in when calling a team member.
pub const TASK_PARAM: &str = "Task";

#[derive(Debug, Error)]
pub enum ManagerError {
    #[error("agent {0:?} is already on the team")]
    DuplicateAgent(String),
    #[error("agent name {0:?} collides with an action of the manager")]
    ReservedName(String),
    #[error("adding {member:?} to {manager:?} would make {manager:?} its own descendant")]
    CyclicTeam { manager: String, member: String },
    #[error(transparent)]
    Agent(#[from] AgentError),
}

impl From<RegistryError> for ManagerError {
    fn from(err: RegistryError) -> Self {
        ManagerError::Agent(AgentError::Registry(err))
    }
}

/// Anything a manager can delegate a task to.
pub trait TeamMember: Send {
    fn profile(&self) -> &AgentProfile;

    fn execute_traced(&mut self, task: TaskPackage, trace: &Trace) -> TaskPackage;

    /// This member's name followed by every agent below it.
    fn member_names(&self) -> Vec<String> {
        vec![self.profile().name.clone()]
    }
}

impl TeamMember for Agent {
    fn profile(&self) -> &AgentProfile {
        Agent::profile(self)
    }

    fn execute_traced(&mut self, task: TaskPackage, trace: &Trace) -> TaskPackage {
        Agent::execute_traced(self, task, trace)
    }
}

/// A team member backed by a person at the console.
pub struct HumanAgent {
    profile: AgentProfile,
    console: Arc<dyn Console>,
}

impl HumanAgent {
    pub const DEFAULT_NAME: &'static str = "Human_Agent";
    pub const DEFAULT_ROLE: &'static str = "Collect instructions from human.";

    pub fn new(console: Arc<dyn Console>) -> Self {
        HumanAgent {
            profile: AgentProfile::new(Self::DEFAULT_NAME, Self::DEFAULT_ROLE)
                .expect("default name is valid"),
            console,
        }
    }

    pub fn with_profile(profile: AgentProfile, console: Arc<dyn Console>) -> Self {
        HumanAgent { profile, console }
    }
}

impl TeamMember for HumanAgent {
    fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    fn execute_traced(&mut self, task: TaskPackage, trace: &Trace) -> TaskPackage {
        let (answer, status) = match self.console.ask(&task.instruction) {
            Ok(Some(line)) => (format!("My instruction is: {line}"), CompletionStatus::Completed),
            Ok(None) => ("end of input".to_string(), CompletionStatus::Failed),
            Err(err) => (err.to_string(), CompletionStatus::Failed),
        };
        let done = task
            .complete(answer, status)
            .unwrap_or_else(|e| panic!("human agent received a finished task: {e}"));
        trace.task_finished(&done);
        done
    }
}

/// Registry entry for a team member; the manager intercepts calls to it.
struct TeamAction {
    spec: ActionSpec,
}

impl Action for TeamAction {
    fn spec(&self) -> ActionSpec {
        self.spec.clone()
    }

    fn call(&self, _params: &Params) -> Result<String, ActionError> {
        Err(ActionError::Failed(format!(
            "{} can only be called by its manager",
            self.spec.action_name
        )))
    }
}

pub fn team_action_spec(member: &AgentProfile) -> ActionSpec {
    ActionSpec::new(member.name.clone(), member.role.clone(), ActionKind::External)
        .param(TASK_PARAM, "the task instruction you want this agent to complete")
}

type Team = IndexMap<String, Box<dyn TeamMember>>;

pub struct ManagerAgent {
    base: Agent,
    team: Team,
    sub_tasks: Vec<TaskPackage>,
}

impl ManagerAgent {
    pub fn new(base: Agent) -> Self {
        ManagerAgent {
            base,
            team: IndexMap::new(),
            sub_tasks: Vec::new(),
        }
    }

    pub fn with_team<I>(base: Agent, team: I) -> Result<Self, ManagerError>
    where
        I: IntoIterator<Item = Box<dyn TeamMember>>,
    {
        let mut manager = ManagerAgent::new(base);
        for member in team {
            manager.add_team_member(member)?;
        }
        Ok(manager)
    }

    pub fn name(&self) -> &str {
        self.base.name()
    }

    pub fn base(&self) -> &Agent {
        &self.base
    }

    pub fn team_names(&self) -> impl Iterator<Item = &str> {
        self.team.keys().map(String::as_str)
    }

    /// Terminal sub-task packages, in delegation order.
    pub fn sub_tasks(&self) -> &[TaskPackage] {
        &self.sub_tasks
    }

    pub fn add_team_agent(&mut self, member: impl TeamMember + 'static) -> Result<(), ManagerError> {
        self.add_team_member(Box::new(member))
    }

    pub fn add_team_member(&mut self, member: Box<dyn TeamMember>) -> Result<(), ManagerError> {
        let name = member.profile().name.clone();
        if self.team.contains_key(&name) {
            return Err(ManagerError::DuplicateAgent(name));
        }
        if self.base.registry().contains(&name) {
            return Err(ManagerError::ReservedName(name));
        }
        if member.member_names().iter().any(|n| n == self.name()) {
            return Err(ManagerError::CyclicTeam {
                manager: self.name().to_string(),
                member: name,
            });
        }
        self.base.registry_mut().register(TeamAction {
            spec: team_action_spec(member.profile()),
        })?;
        self.team.insert(name, member);
        Ok(())
    }

    /// Hands `sub_instruction` to `agent_name` and waits for its answer.
    pub fn delegate(&mut self, agent_name: &str, sub_instruction: &str, trace: &Trace) -> String {
        delegate_to(
            &mut self.team,
            &mut self.sub_tasks,
            self.base.name(),
            agent_name,
            sub_instruction,
            trace,
        )
    }

    pub fn execute(&mut self, task: TaskPackage) -> TaskPackage {
        self.execute_traced(task, &Trace::disabled())
    }

    pub fn execute_traced(&mut self, task: TaskPackage, trace: &Trace) -> TaskPackage {
        let mut dispatch = TeamDispatch {
            team: &mut self.team,
            sub_tasks: &mut self.sub_tasks,
        };
        self.base.run(task, trace, &mut dispatch)
    }
}

impl TeamMember for ManagerAgent {
    fn profile(&self) -> &AgentProfile {
        self.base.profile()
    }

    fn execute_traced(&mut self, task: TaskPackage, trace: &Trace) -> TaskPackage {
        ManagerAgent::execute_traced(self, task, trace)
    }

    fn member_names(&self) -> Vec<String> {
        let mut names = vec![self.name().to_string()];
        for member in self.team.values() {
            names.extend(member.member_names());
        }
        names
    }
}

fn delegate_to(
    team: &mut Team,
    sub_tasks: &mut Vec<TaskPackage>,
    manager_name: &str,
    agent_name: &str,
    instruction: &str,
    trace: &Trace,
) -> String {
    let Some(member) = team.get_mut(agent_name) else {
        let known: Vec<&str> = team.keys().map(String::as_str).collect();
        return format!(
            "Unknown agent: {agent_name}. Team: {}.",
            if known.is_empty() { "(empty)".to_string() } else { known.join(", ") }
        );
    };
    let task = match TaskPackage::new(instruction, manager_name, agent_name) {
        Ok(task) => task,
        Err(err) => return format!("Action error: {err}"),
    };
    trace.task_created(&task);
    let done = member.execute_traced(task, trace);
    let observation = match done.completion {
        CompletionStatus::Completed => format!("Response from {agent_name}: {}", done.answer),
        _ if done.answer.is_empty() => {
            format!("{agent_name} failed: no answer within its step budget")
        }
        _ => format!("{agent_name} failed: {}", done.answer),
    };
    sub_tasks.push(done);
    observation
}

struct TeamDispatch<'a> {
    team: &'a mut Team,
    sub_tasks: &'a mut Vec<TaskPackage>,
}

impl Dispatch for TeamDispatch<'_> {
    fn dispatch(
        &mut self,
        registry: &ActionRegistry,
        inv: &ActionInvocation,
        task: &TaskPackage,
        trace: &Trace,
    ) -> String {
        if self.team.contains_key(&inv.action_name) {
            delegate_to(
                self.team,
                self.sub_tasks,
                &task.executor,
                &inv.action_name,
                inv.param(TASK_PARAM).unwrap_or(""),
                trace,
            )
        } else {
            registry.execute(inv)
        }
    }
}
