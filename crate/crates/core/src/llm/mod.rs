//! Chat backends.
//!
//! Every prompt is sent as a fresh, self-contained exchange; backends keep no
//! conversational state. [`HttpBackend`] speaks the chat-completions wire
//! format served by local model hosts, and the mocks in [`mock`] replay
//! scripted texts for deterministic runs.

mod budget;
mod config;
mod http;
pub mod mock;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use budget::{check_context, count_budget};
pub use config::{LlmConfig, StageTokens, API_KEY_ENV, BASE_URL_ENV};
pub use http::{HttpBackend, HttpConfig};
pub use mock::{FnBackend, RecordingBackend, ScriptedBackend};

/// Upper end of the supported temperature sweep.
pub const MAX_TEMPERATURE: f64 = 3.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_name: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    pub max_tokens: u32,
    #[serde(default)]
    pub request_seed: Option<u64>,
}

impl ChatRequest {
    /// A single-user-message request.
    pub fn single(model_name: &str, temperature: f64, prompt: impl Into<String>, max_tokens: u32) -> Self {
        ChatRequest {
            model_name: model_name.to_string(),
            temperature,
            messages: vec![ChatMessage::user(prompt)],
            max_tokens,
            request_seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !self.messages.iter().any(|m| m.role == Role::User) {
            return Err(LlmError::InvalidRequest(
                "a request needs at least one user message".to_string(),
            ));
        }
        if !(0.0..=MAX_TEMPERATURE).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, {MAX_TEMPERATURE}]",
                self.temperature
            )));
        }
        Ok(())
    }

    /// The text of the last user message.
    pub fn prompt(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    /// Non-empty on success.
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum LlmError {
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    /// The prompt does not fit the model context. Callers may shrink it.
    #[error("prompt exceeds the context window: {0}")]
    ContextLength(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("scripted backend has no responses left")]
    QueueExhausted,
}

impl LlmError {
    /// Whether a retry might succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            LlmError::Timeout(_) | LlmError::Transport(_) => true,
            LlmError::Status { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

/// A chat-completions endpoint. Implementations are shared across threads.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError>;

    /// Identifies the backend in run logs.
    fn describe(&self) -> String {
        "backend".to_string()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        (**self).complete(request)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}
