use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, LlmConfig, LlmError};
use crate::prompt::Prompt;

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 2],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Debug, Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

const EXCERPT_CHARS: usize = 200;

fn excerpt(body: &str) -> String {
    let mut out: String = body.chars().take(EXCERPT_CHARS).collect();
    if body.chars().count() > EXCERPT_CHARS {
        out.push('…');
    }
    out
}

fn backend_error(status: Option<u16>, message: impl Into<String>) -> LlmError {
    LlmError::Backend {
        status,
        message: message.into(),
    }
}

fn completions_url(endpoint: &str) -> String {
    let base = endpoint.trim_end_matches('/');
    if base.ends_with("/chat/completions") {
        base.to_string()
    } else {
        format!("{base}/chat/completions")
    }
}

/// Chat-completions backend for one model.
pub struct HttpBackend {
    config: LlmConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: LlmConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpBackend { config, agent })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn chat(&self, system: &str, user: &str) -> Result<String, LlmError> {
        let request = ChatRequest {
            model: &self.config.llm_name,
            messages: [
                ChatMessage {
                    role: "system",
                    content: system,
                },
                ChatMessage {
                    role: "user",
                    content: user,
                },
            ],
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };
        let body = serde_json::to_string(&request)
            .map_err(|e| backend_error(None, format!("encoding request: {e}")))?;

        let mut call = self
            .agent
            .post(&completions_url(&self.config.endpoint))
            .header("Content-Type", "application/json");
        let key = self.config.api_key();
        if !key.is_empty() {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send(body.as_bytes())
            .map_err(|e| backend_error(None, e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| backend_error(Some(status), format!("reading body: {e}")))?;
        if !(200..300).contains(&status) {
            return Err(backend_error(Some(status), excerpt(&text)));
        }
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| {
            backend_error(Some(status), format!("bad response ({e}): {}", excerpt(&text)))
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| backend_error(Some(status), format!("no message content: {}", excerpt(&text))))
    }
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, LlmError> {
        self.chat(&prompt.system, &prompt.user)
    }
}

/// One-shot chat completion with a fresh client.
pub fn http_chat(config: &LlmConfig, system: &str, user: &str) -> Result<String, LlmError> {
    HttpBackend::new(config.clone())?.chat(system, user)
}
