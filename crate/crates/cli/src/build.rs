//! Turns a validated [`Plan`] into a live orchestration tree.

use std::sync::Arc;

use anyhow::{Context, Result};
use troupe::actions::builtin_action;
use troupe::{
    ActionRegistry, Agent, Backend, Console, HttpBackend, HumanAgent, ManagerAgent, PromptTemplate,
    TeamMember,
};

use crate::config::{AgentPlan, BackendPlan, MemberPlan, Plan};

fn backend(plan: &BackendPlan) -> Result<Arc<dyn Backend>> {
    Ok(match plan {
        BackendPlan::Script(script) => Arc::new(script.backend()),
        BackendPlan::Http(cfg) => Arc::new(HttpBackend::new(cfg.clone())?),
    })
}

fn agent(plan: &AgentPlan, template: &PromptTemplate, console: &Arc<dyn Console>) -> Result<Agent> {
    let mut registry = ActionRegistry::new();
    for name in &plan.actions {
        let action = builtin_action(name, console).with_context(|| format!("unknown action {name}"))?;
        registry.register_shared(action)?;
    }
    let mut agent = Agent::new(plan.profile.clone(), registry, backend(&plan.backend)?)?
        .with_template(template.clone());
    if let Some(max_steps) = plan.max_steps {
        agent = agent.with_max_steps(max_steps)?;
    }
    Ok(agent)
}

fn member(plan: &Plan, name: &str, console: &Arc<dyn Console>) -> Result<Box<dyn TeamMember>> {
    let spec = plan
        .members
        .get(name)
        .with_context(|| format!("{name} is not defined"))?;
    Ok(match spec {
        MemberPlan::Agent(a) => Box::new(agent(a, &plan.template, console)?),
        MemberPlan::Human(profile) => Box::new(HumanAgent::with_profile(profile.clone(), console.clone())),
        MemberPlan::Manager { base, team } => {
            let mut manager = ManagerAgent::new(agent(base, &plan.template, console)?);
            for m in team {
                manager
                    .add_team_member(member(plan, m, console)?)
                    .with_context(|| format!("adding {m} to {name}"))?;
            }
            Box::new(manager)
        }
    })
}

/// Builds the root member and everything below it. Human agents and
/// `HumanInput` actions all talk through `console`.
pub fn build_root(plan: &Plan, console: Arc<dyn Console>) -> Result<Box<dyn TeamMember>> {
    member(plan, &plan.root, &console)
}
