use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{check_context, ChatBackend, ChatMessage, ChatRequest, ChatResponse, LlmError};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Base URL up to and including the API version, e.g. `http://localhost:11434/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    /// Additional attempts after the first for transient failures.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each subsequent one.
    pub backoff: Duration,
    /// Pre-flight limit on [`super::count_budget`].
    pub context_budget: Option<usize>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://localhost:11434/v1".to_string(),
            api_key: None,
            timeout: Duration::from_secs(600),
            max_retries: 3,
            backoff: Duration::from_millis(500),
            context_budget: None,
        }
    }
}

/// Blocking chat-completions client.
pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    stream: bool,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

fn mentions_context_limit(body: &str) -> bool {
    let lower = body.to_lowercase();
    lower.contains("context")
        && ["length", "window", "too long", "exceed", "maximum"]
            .iter()
            .any(|k| lower.contains(k))
}

/// Decodes a chat-completions response body.
pub(crate) fn parse_body(body: &str) -> Result<(String, u64, u64), LlmError> {
    let wire: WireResponse =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(format!("{e}")))?;
    let text = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| LlmError::MalformedResponse("no message content".to_string()))?;
    if text.trim().is_empty() {
        return Err(LlmError::MalformedResponse("empty completion".to_string()));
    }
    let (p, c) = wire
        .usage
        .map(|u| (u.prompt_tokens, u.completion_tokens))
        .unwrap_or((0, 0));
    Ok((text, p, c))
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(HttpBackend { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let wire = WireRequest {
            model: &request.model_name,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
            seed: request.request_seed,
            stream: false,
        };
        let started = Instant::now();
        let mut builder = self.client.post(self.endpoint()).json(&wire);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| self.transport_error(e))?;
        let status = response.status().as_u16();
        let body = response.text().map_err(|e| self.transport_error(e))?;
        if !(200..300).contains(&status) {
            if (400..500).contains(&status) && mentions_context_limit(&body) {
                return Err(LlmError::ContextLength(body));
            }
            return Err(LlmError::Status { status, body });
        }
        let (text, prompt_tokens, completion_tokens) = parse_body(&body)?;
        Ok(ChatResponse {
            text,
            prompt_tokens,
            completion_tokens,
            latency: started.elapsed(),
        })
    }

    fn transport_error(&self, e: reqwest::Error) -> LlmError {
        if e.is_timeout() {
            LlmError::Timeout(self.config.timeout)
        } else {
            LlmError::Transport(e.to_string())
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        check_context(request, self.config.context_budget)?;
        let mut delay = self.config.backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(request) {
                Err(e) if e.is_transient() && attempt < self.config.max_retries => {
                    log::warn!("chat request failed ({e}); retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn describe(&self) -> String {
        format!("http:{}", self.config.base_url)
    }
}
