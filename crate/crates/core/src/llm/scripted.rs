use std::collections::VecDeque;
use std::sync::Mutex;

use super::{Backend, LlmError};
use crate::prompt::Prompt;

enum Script {
    Queue(VecDeque<String>),
    /// (substring of the user message, reply); first match wins.
    Triggers(Vec<(String, String)>),
}

/// Deterministic backend replaying predefined replies.
pub struct ScriptedBackend {
    state: Mutex<State>,
}

struct State {
    script: Script,
    consumed: usize,
    prompts: Vec<Prompt>,
}

impl ScriptedBackend {
    /// Serves `responses` in order, one per call.
    pub fn queue<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_script(Script::Queue(
            responses.into_iter().map(Into::into).collect(),
        ))
    }

    /// Replies with the first entry whose trigger occurs in the user message.
    pub fn triggers<I, T, R>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (T, R)>,
        T: Into<String>,
        R: Into<String>,
    {
        Self::with_script(Script::Triggers(
            pairs
                .into_iter()
                .map(|(t, r)| (t.into(), r.into()))
                .collect(),
        ))
    }

    fn with_script(script: Script) -> Self {
        ScriptedBackend {
            state: Mutex::new(State {
                script,
                consumed: 0,
                prompts: Vec::new(),
            }),
        }
    }

    /// Number of replies served so far.
    pub fn consumed(&self) -> usize {
        self.lock().consumed
    }

    /// Every prompt received, including ones that found no reply.
    pub fn prompts(&self) -> Vec<Prompt> {
        self.lock().prompts.clone()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, LlmError> {
        let mut state = self.lock();
        state.prompts.push(prompt.clone());
        let reply = match &mut state.script {
            Script::Queue(queue) => queue.pop_front(),
            Script::Triggers(pairs) => pairs
                .iter()
                .find(|(trigger, _)| prompt.user.contains(trigger.as_str()))
                .map(|(_, reply)| reply.clone()),
        };
        match reply {
            Some(reply) => {
                state.consumed += 1;
                Ok(reply)
            }
            None => Err(LlmError::ScriptExhausted(match state.script {
                Script::Queue(_) => None,
                Script::Triggers(_) => Some("no trigger matched".into()),
            })),
        }
    }
}
