//! Run configuration files.
//!
//! ```toml
//! [[agents]]
//! name = "math_agent"
//! role = "Solves arithmetic with a calculator."
//! actions = ["Calculator"]
//! llm = "scripted:math.script.toml"   # path relative to this file
//! max_steps = 5
//!
//! [[agents]]
//! name = "Human_Agent"
//! kind = "human"
//!
//! [manager]
//! name = "lead"
//! role = "Coordinates the team."
//! team = ["math_agent", "Human_Agent"]
//! llm = { llm_name = "gpt-4", endpoint = "http://localhost:8000/v1" }
//! ```
//!
//! `[[managers]]` entries define intermediate managers that the top
//! `[manager]` (or another intermediate manager) can put on its team.
//! `prompt_template` overrides the section order for every agent.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::Deserialize;
use troupe::actions::BUILTIN_ACTIONS;
use troupe::types::is_valid_name;
use troupe::{AgentProfile, HumanAgent, LlmConfig, PromptTemplate, Section, FINISH};

use crate::script::{parse_script, Script};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub agents: Vec<AgentConfig>,
    pub manager: Option<ManagerConfig>,
    #[serde(default)]
    pub managers: Vec<ManagerConfig>,
    pub prompt_template: Option<TemplateConfig>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    #[default]
    Llm,
    Human,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub name: String,
    #[serde(default)]
    pub role: Option<String>,
    pub constraints: Option<String>,
    #[serde(default)]
    pub actions: Vec<String>,
    /// `"scripted:<file>"` or an LLM table.
    pub llm: Option<toml::Value>,
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub kind: AgentKind,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManagerConfig {
    pub name: String,
    #[serde(default)]
    pub role: Option<String>,
    pub constraints: Option<String>,
    #[serde(default)]
    pub actions: Vec<String>,
    #[serde(default)]
    pub team: Vec<String>,
    pub llm: Option<toml::Value>,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateConfig {
    pub sections: Vec<String>,
    pub instructions: Option<String>,
}

/// One problem found in a config, located by a field path such as
/// `agents[1].actions[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub source_path: PathBuf,
    pub issues: Vec<Issue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config {}", self.source_path.display())?;
        for issue in &self.issues {
            write!(f, "\n  {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
pub enum BackendPlan {
    Script(Script),
    Http(LlmConfig),
}

#[derive(Debug, Clone)]
pub struct AgentPlan {
    pub profile: AgentProfile,
    pub actions: Vec<String>,
    pub backend: BackendPlan,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone)]
pub enum MemberPlan {
    Agent(AgentPlan),
    Human(AgentProfile),
    Manager { base: AgentPlan, team: Vec<String> },
}

/// A validated config: every member by name, and the one that receives the
/// user's task.
#[derive(Debug, Clone)]
pub struct Plan {
    pub members: IndexMap<String, MemberPlan>,
    pub root: String,
    pub template: PromptTemplate,
}

struct Checker<'a> {
    base_dir: &'a Path,
    issues: Vec<Issue>,
}

impl Checker<'_> {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn actions(&mut self, path: &str, actions: &[String]) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut ok = Vec::new();
        for (i, name) in actions.iter().enumerate() {
            let at = format!("{path}.actions[{i}]");
            if !BUILTIN_ACTIONS.contains(&name.as_str()) {
                self.issue(
                    at,
                    format!("unknown action {name:?}; known actions: {}", BUILTIN_ACTIONS.join(", ")),
                );
            } else if !seen.insert(name.as_str()) {
                self.issue(at, format!("action {name:?} is listed twice"));
            } else if name != FINISH {
                ok.push(name.clone());
            }
        }
        ok
    }

    fn backend(&mut self, path: &str, llm: Option<&toml::Value>) -> Option<BackendPlan> {
        let at = format!("{path}.llm");
        match llm {
            None => {
                self.issue(at, "missing; use \"scripted:<file>\" or an llm table");
                None
            }
            Some(toml::Value::String(spec)) => {
                let Some(file) = spec.strip_prefix("scripted:").map(str::trim).filter(|f| !f.is_empty())
                else {
                    self.issue(at, format!("expected \"scripted:<file>\" or an llm table, got {spec:?}"));
                    return None;
                };
                let full = self.base_dir.join(file);
                let text = match fs::read_to_string(&full) {
                    Ok(text) => text,
                    Err(e) => {
                        self.issue(at, format!("cannot read script {}: {e}", full.display()));
                        return None;
                    }
                };
                match parse_script(&text) {
                    Ok(script) => Some(BackendPlan::Script(script)),
                    Err(e) => {
                        self.issue(at, format!("script {}: {e}", full.display()));
                        None
                    }
                }
            }
            Some(value @ toml::Value::Table(_)) => match value.clone().try_into::<LlmConfig>() {
                Ok(cfg) => match cfg.validate() {
                    Ok(()) => Some(BackendPlan::Http(cfg)),
                    Err(e) => {
                        self.issue(at, e.to_string());
                        None
                    }
                },
                Err(e) => {
                    self.issue(at, e.message().to_string());
                    None
                }
            },
            Some(_) => {
                self.issue(at, "expected \"scripted:<file>\" or an llm table");
                None
            }
        }
    }

    fn profile(&mut self, path: &str, name: &str, role: Option<&str>, constraints: Option<&str>) -> Option<AgentProfile> {
        let role = role.unwrap_or("");
        if role.trim().is_empty() {
            self.issue(format!("{path}.role"), "missing or empty");
        }
        self.named_profile(path, name, role, constraints)
    }

    fn named_profile(&mut self, path: &str, name: &str, role: &str, constraints: Option<&str>) -> Option<AgentProfile> {
        if !is_valid_name(name) {
            self.issue(
                format!("{path}.name"),
                format!("{name:?} is not a valid name (letters, digits and _ only)"),
            );
            return None;
        }
        let profile = AgentProfile::new(name, role).ok()?;
        Some(match constraints {
            Some(c) => profile.with_constraints(c),
            None => profile,
        })
    }

    fn max_steps(&mut self, path: &str, max_steps: Option<usize>) {
        if max_steps == Some(0) {
            self.issue(format!("{path}.max_steps"), "must be at least 1");
        }
    }

    fn agent_plan(
        &mut self,
        path: &str,
        name: &str,
        role: Option<&str>,
        constraints: Option<&str>,
        actions: &[String],
        llm: Option<&toml::Value>,
        max_steps: Option<usize>,
    ) -> Option<AgentPlan> {
        let profile = self.profile(path, name, role, constraints);
        let actions = self.actions(path, actions);
        let backend = self.backend(path, llm);
        self.max_steps(path, max_steps);
        Some(AgentPlan {
            profile: profile?,
            actions,
            backend: backend?,
            max_steps: max_steps.filter(|&m| m > 0),
        })
    }

    fn template(&mut self, template: Option<&TemplateConfig>) -> PromptTemplate {
        let Some(t) = template else {
            return PromptTemplate::default();
        };
        let mut sections = Vec::new();
        for (i, name) in t.sections.iter().enumerate() {
            let at = format!("prompt_template.sections[{i}]");
            match Section::ALL.iter().find(|s| format!("{s:?}") == *name) {
                Some(s) if sections.contains(s) => self.issue(at, format!("section {name} is listed twice")),
                Some(s) => sections.push(*s),
                None => {
                    let known: Vec<String> = Section::ALL.iter().map(|s| format!("{s:?}")).collect();
                    self.issue(at, format!("unknown section {name:?}; known sections: {}", known.join(", ")));
                }
            }
        }
        if !sections.contains(&Section::CurrentTask) {
            self.issue("prompt_template.sections", "must include CurrentTask");
        }
        let mut template = PromptTemplate::with_sections(sections);
        if let Some(instructions) = &t.instructions {
            template.instructions = instructions.clone();
        }
        template
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string().trim_end().to_string())
    }

    /// Checks the config and resolves script paths against `base_dir`.
    pub fn validate(&self, base_dir: &Path) -> Result<Plan, Vec<Issue>> {
        let mut c = Checker {
            base_dir,
            issues: Vec::new(),
        };
        let mut members: IndexMap<String, MemberPlan> = IndexMap::new();
        // (name, path of the definition, team with its path prefix)
        let mut teams: Vec<(String, String, Vec<String>)> = Vec::new();
        let mut defined_at: HashMap<String, String> = HashMap::new();

        let mut define = |c: &mut Checker, path: &str, name: &str| -> bool {
            if let Some(first) = defined_at.get(name) {
                c.issue(format!("{path}.name"), format!("{name:?} is already defined at {first}"));
                false
            } else {
                defined_at.insert(name.to_string(), path.to_string());
                true
            }
        };

        for (i, a) in self.agents.iter().enumerate() {
            let path = format!("agents[{i}]");
            let fresh = define(&mut c, &path, &a.name);
            let plan = match a.kind {
                AgentKind::Human => {
                    if !a.actions.is_empty() {
                        c.issue(format!("{path}.actions"), "human agents take no actions");
                    }
                    if a.llm.is_some() {
                        c.issue(format!("{path}.llm"), "human agents take no llm");
                    }
                    c.max_steps(&path, a.max_steps);
                    let role = a.role.as_deref().unwrap_or(HumanAgent::DEFAULT_ROLE);
                    c.named_profile(&path, &a.name, role, a.constraints.as_deref())
                        .map(MemberPlan::Human)
                }
                AgentKind::Llm => c
                    .agent_plan(
                        &path,
                        &a.name,
                        a.role.as_deref(),
                        a.constraints.as_deref(),
                        &a.actions,
                        a.llm.as_ref(),
                        a.max_steps,
                    )
                    .map(MemberPlan::Agent),
            };
            if let (true, Some(plan)) = (fresh, plan) {
                members.insert(a.name.clone(), plan);
            }
        }

        let all_managers = self
            .managers
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("managers[{i}]"), m))
            .chain(self.manager.iter().map(|m| ("manager".to_string(), m)));
        for (path, m) in all_managers {
            let fresh = define(&mut c, &path, &m.name);
            if m.team.is_empty() {
                c.issue(format!("{path}.team"), "a manager needs at least one team member");
            }
            let base = c.agent_plan(
                &path,
                &m.name,
                m.role.as_deref(),
                m.constraints.as_deref(),
                &m.actions,
                m.llm.as_ref(),
                m.max_steps,
            );
            teams.push((m.name.clone(), path, m.team.clone()));
            if let (true, Some(base)) = (fresh, base) {
                members.insert(
                    m.name.clone(),
                    MemberPlan::Manager {
                        base,
                        team: m.team.clone(),
                    },
                );
            }
        }

        // every member sits on at most one team, and team names resolve
        let mut owner: HashMap<&str, String> = HashMap::new();
        for (manager, path, team) in &teams {
            for (j, member) in team.iter().enumerate() {
                let at = format!("{path}.team[{j}]");
                if !defined_at.contains_key(member) {
                    c.issue(at, format!("{member:?} is not a defined agent"));
                } else if member == manager {
                    c.issue(at, format!("{manager:?} cannot be on its own team"));
                } else if let Some(first) = owner.get(member.as_str()) {
                    c.issue(at, format!("{member:?} is already on the team at {first}"));
                } else {
                    owner.insert(member, at);
                }
            }
        }

        // manager teams must not loop back
        let team_of: HashMap<&str, &Vec<String>> =
            teams.iter().map(|(n, _, t)| (n.as_str(), t)).collect();
        for (manager, path, _) in &teams {
            let mut stack: Vec<&str> = vec![manager.as_str()];
            let mut seen: HashSet<&str> = HashSet::new();
            while let Some(current) = stack.pop() {
                for member in team_of.get(current).into_iter().flat_map(|t| t.iter()) {
                    if member == manager && current != manager.as_str() {
                        c.issue(format!("{path}.team"), format!("{manager:?} is part of its own hierarchy"));
                        stack.clear();
                        break;
                    }
                    if seen.insert(member) {
                        stack.push(member);
                    }
                }
            }
        }

        let root = match (&self.manager, self.agents.len()) {
            (Some(m), _) => Some(m.name.clone()),
            (None, 1) if self.managers.is_empty() => Some(self.agents[0].name.clone()),
            (None, 0) if self.managers.is_empty() => {
                c.issue("agents", "define at least one agent");
                None
            }
            (None, _) => {
                c.issue("manager", "required when the config defines more than one agent");
                None
            }
        };
        if let Some(root) = &root {
            for (name, path) in &defined_at {
                if name != root && !owner.contains_key(name.as_str()) {
                    c.issue(path.clone(), format!("{name:?} is not on any team"));
                }
            }
        }

        let template = c.template(self.prompt_template.as_ref());
        if !c.issues.is_empty() {
            c.issues.sort_by(|a, b| path_key(&a.path).cmp(&path_key(&b.path)));
            return Err(c.issues);
        }
        Ok(Plan {
            members,
            root: root.expect("no issues means a root exists"),
            template,
        })
    }
}

/// Orders issues by section, then by index, then by field.
fn path_key(path: &str) -> (usize, Vec<usize>, String) {
    let section = ["agents", "managers", "manager", "prompt_template"]
        .iter()
        .position(|s| path.starts_with(s) && !path[s.len()..].starts_with(|c: char| c.is_alphabetic()))
        .unwrap_or(4);
    let indices = path
        .split('[')
        .skip(1)
        .filter_map(|p| p.split(']').next()?.parse().ok())
        .collect();
    (section, indices, path.to_string())
}

/// Reads, parses and validates a config file.
pub fn load_plan(path: &Path) -> Result<Plan, ConfigError> {
    let fail = |issues| ConfigError {
        source_path: path.to_path_buf(),
        issues,
    };
    let text = fs::read_to_string(path).map_err(|e| {
        fail(vec![Issue {
            path: "config".into(),
            message: format!("cannot read file: {e}"),
        }])
    })?;
    let config = RunConfig::parse(&text).map_err(|e| {
        fail(vec![Issue {
            path: "config".into(),
            message: e,
        }])
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    config.validate(base).map_err(fail)
}
