//! Generation backends.
//!
//! Every backend maps a composed [`Prompt`] to completion text. The
//! scripted backend replays canned replies for tests and benchmarks; the
//! HTTP backend speaks the OpenAI-compatible chat-completions format, with
//! the prompt's system part as the system message and its user part as the
//! user message.

mod http;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::Prompt;

pub use http::{http_chat, HttpBackend};
pub use scripted::ScriptedBackend;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("scripted backend has no reply left{}", .0.as_deref().map(|m| format!(": {m}")).unwrap_or_default())]
    ScriptExhausted(Option<String>),
    #[error("backend error{}: {message}", .status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Backend {
        status: Option<u16>,
        message: String,
    },
    #[error("invalid LLM config: {0}")]
    InvalidConfig(String),
}

pub trait Backend: Send + Sync {
    /// Raw completion for `prompt`.
    fn complete(&self, prompt: &Prompt) -> Result<String, LlmError>;
}

/// Calls `backend`, rejecting empty prompts and trimming trailing whitespace.
pub fn generate(backend: &dyn Backend, prompt: &Prompt) -> Result<String, LlmError> {
    if prompt.system.trim().is_empty() && prompt.user.trim().is_empty() {
        return Err(LlmError::EmptyPrompt);
    }
    let mut text = backend.complete(prompt)?;
    text.truncate(text.trim_end().len());
    Ok(text)
}

/// Connection settings for one named model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub llm_name: String,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_endpoint() -> String {
    "http://localhost:8000/v1".into()
}

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_max_tokens() -> u32 {
    512
}

fn default_timeout() -> f64 {
    60.0
}

impl LlmConfig {
    pub fn new(llm_name: impl Into<String>) -> Self {
        LlmConfig {
            llm_name: llm_name.into(),
            endpoint: default_endpoint(),
            api_key_env: default_api_key_env(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            timeout_s: default_timeout(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.llm_name.trim().is_empty() {
            return Err(LlmError::InvalidConfig("llm_name is empty".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidConfig("max_tokens must be >= 1".into()));
        }
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(LlmError::InvalidConfig(format!(
                "timeout_s must be positive, got {}",
                self.timeout_s
            )));
        }
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(LlmError::InvalidConfig(format!(
                "endpoint must be an http(s) URL, got {:?}",
                self.endpoint
            )));
        }
        Ok(())
    }

    /// The API key from the configured environment variable; empty if unset.
    pub fn api_key(&self) -> String {
        std::env::var(&self.api_key_env).unwrap_or_default()
    }
}
