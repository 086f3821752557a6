//! Script files for the scripted backend.
//!
//! ```toml
//! # replies served in order
//! [[step]]
//! action = "Calculator"
//! params = { expression = "75*34+12" }
//!
//! [[step]]
//! raw = "free text that is not an action"
//! ```
//!
//! A script holds either `[[step]]` entries or `[[trigger]]` entries. A
//! trigger replies whenever `when` occurs in the user message; the first
//! matching trigger wins.
//!
//! ```toml
//! [[trigger]]
//! when = "Observation: 4"
//! action = "Finish"
//! params = { response = "4" }
//! ```

use serde::Deserialize;
use toml::Value;
use troupe::{serialize_invocation, ActionInvocation, ScriptedBackend};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScript {
    #[serde(default)]
    step: Vec<RawReply>,
    #[serde(default)]
    trigger: Vec<RawReply>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReply {
    when: Option<String>,
    action: Option<String>,
    #[serde(default)]
    params: toml::Table,
    raw: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Script {
    Queue(Vec<String>),
    Triggers(Vec<(String, String)>),
}

impl Script {
    pub fn backend(&self) -> ScriptedBackend {
        match self {
            Script::Queue(replies) => ScriptedBackend::queue(replies.clone()),
            Script::Triggers(pairs) => ScriptedBackend::triggers(pairs.clone()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Script::Queue(r) => r.len(),
            Script::Triggers(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn scalar(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(b) => Some(b.to_string()),
        _ => None,
    }
}

fn reply_text(reply: &RawReply, what: &str) -> Result<String, String> {
    match (&reply.action, &reply.raw) {
        (Some(_), Some(_)) => Err(format!("{what}: give either action or raw, not both")),
        (None, None) => Err(format!("{what}: missing action or raw")),
        (None, Some(raw)) => {
            if !reply.params.is_empty() {
                return Err(format!("{what}: params only go with action"));
            }
            Ok(raw.clone())
        }
        (Some(action), None) => {
            let mut inv = ActionInvocation::new(action.clone());
            for (key, value) in &reply.params {
                let text = scalar(value)
                    .ok_or_else(|| format!("{what}.params.{key}: expected a string, number or boolean"))?;
                inv = inv.with(key.clone(), text);
            }
            Ok(serialize_invocation(&inv))
        }
    }
}

pub fn parse_script(text: &str) -> Result<Script, String> {
    let raw: RawScript = toml::from_str(text).map_err(|e| e.message().to_string())?;
    match (raw.step.is_empty(), raw.trigger.is_empty()) {
        (false, false) => Err("a script holds either [[step]] or [[trigger]] entries, not both".into()),
        (true, true) => Err("the script has no [[step]] or [[trigger]] entries".into()),
        (false, true) => {
            let mut replies = Vec::new();
            for (i, reply) in raw.step.iter().enumerate() {
                let what = format!("step[{i}]");
                if reply.when.is_some() {
                    return Err(format!("{what}: when only goes with [[trigger]]"));
                }
                replies.push(reply_text(reply, &what)?);
            }
            Ok(Script::Queue(replies))
        }
        (true, false) => {
            let mut pairs = Vec::new();
            for (i, reply) in raw.trigger.iter().enumerate() {
                let what = format!("trigger[{i}]");
                let when = reply
                    .when
                    .clone()
                    .filter(|w| !w.is_empty())
                    .ok_or_else(|| format!("{what}: missing when"))?;
                pairs.push((when, reply_text(reply, &what)?));
            }
            Ok(Script::Triggers(pairs))
        }
    }
}
