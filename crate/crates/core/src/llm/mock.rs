//! In-process backends for tests and replays.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use super::{check_context, ChatBackend, ChatRequest, ChatResponse, LlmError};

fn respond(request: &ChatRequest, text: String) -> ChatResponse {
    ChatResponse {
        prompt_tokens: super::count_budget(request) as u64,
        completion_tokens: text.split_whitespace().count() as u64,
        text,
        latency: Duration::ZERO,
    }
}

/// Returns queued results in order, then [`LlmError::QueueExhausted`].
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<Result<String, LlmError>>>,
    context_budget: Option<usize>,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_results(responses.into_iter().map(|s| Ok(s.into())))
    }

    /// A script that may also contain failures.
    pub fn from_results<I: IntoIterator<Item = Result<String, LlmError>>>(results: I) -> Self {
        ScriptedBackend {
            queue: Mutex::new(results.into_iter().collect()),
            context_budget: None,
        }
    }

    /// Rejects oversized prompts like a real endpoint would, without
    /// consuming a scripted response.
    pub fn with_context_budget(mut self, budget: usize) -> Self {
        self.context_budget = Some(budget);
        self
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("queue lock").len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        check_context(request, self.context_budget)?;
        let next = self
            .queue
            .lock()
            .expect("queue lock")
            .pop_front()
            .ok_or(LlmError::QueueExhausted)?;
        next.map(|text| respond(request, text))
    }

    fn describe(&self) -> String {
        "scripted".to_string()
    }
}

/// Computes each response from the request. Deterministic if `f` is.
pub struct FnBackend<F> {
    f: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnBackend { f }
    }
}

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        (self.f)(request).map(|text| respond(request, text))
    }

    fn describe(&self) -> String {
        "function".to_string()
    }
}

/// Wraps another backend and keeps every request and its outcome.
pub struct RecordingBackend<B> {
    inner: B,
    log: Mutex<Vec<(ChatRequest, Result<String, LlmError>)>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<(ChatRequest, Result<String, LlmError>)> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn prompts(&self) -> Vec<String> {
        self.calls().iter().map(|(r, _)| r.prompt().to_string()).collect()
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let out = self.inner.complete(request);
        self.log.lock().expect("log lock").push((
            request.clone(),
            out.as_ref().map(|r| r.text.clone()).map_err(Clone::clone),
        ));
        out
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }
}
