use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{HttpConfig, LlmError};

/// Overrides `base_url` when set.
pub const BASE_URL_ENV: &str = "POLICY_REFINE_LLM_URL";
/// Overrides `api_key` when set.
pub const API_KEY_ENV: &str = "POLICY_REFINE_LLM_KEY";

/// Completion budgets per prompt stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageTokens {
    pub strategy: u32,
    pub rules: u32,
    pub code: u32,
    pub reflection: u32,
}

impl Default for StageTokens {
    fn default() -> Self {
        StageTokens {
            strategy: 2048,
            rules: 1024,
            code: 1024,
            reflection: 4096,
        }
    }
}

/// Endpoint settings, as read from a TOML file.
///
/// ```toml
/// base_url = "http://localhost:11434/v1"
/// model = "qwen2.5:72b"
/// timeout_secs = 600
///
/// [max_tokens]
/// reflection = 8192
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub context_budget: Option<usize>,
    pub max_tokens: StageTokens,
}

impl Default for LlmConfig {
    fn default() -> Self {
        let http = HttpConfig::default();
        LlmConfig {
            base_url: http.base_url,
            api_key: None,
            model: "llama3.1:8b".to_string(),
            timeout_secs: http.timeout.as_secs(),
            max_retries: http.max_retries,
            backoff_ms: http.backoff.as_millis() as u64,
            context_budget: None,
            max_tokens: StageTokens::default(),
        }
    }
}

impl LlmConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, LlmError> {
        toml::from_str(text).map_err(|e| LlmError::InvalidRequest(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::InvalidRequest(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Applies the environment-variable overrides.
    pub fn with_env(self) -> Self {
        self.with_overrides(std::env::var(BASE_URL_ENV).ok(), std::env::var(API_KEY_ENV).ok())
    }

    pub fn with_overrides(mut self, base_url: Option<String>, api_key: Option<String>) -> Self {
        if let Some(url) = base_url.filter(|u| !u.is_empty()) {
            self.base_url = url;
        }
        if let Some(key) = api_key.filter(|k| !k.is_empty()) {
            self.api_key = Some(key);
        }
        self
    }

    pub fn http_config(&self) -> HttpConfig {
        HttpConfig {
            base_url: self.base_url.clone(),
            api_key: self.api_key.clone(),
            timeout: Duration::from_secs(self.timeout_secs),
            max_retries: self.max_retries,
            backoff: Duration::from_millis(self.backoff_ms),
            context_budget: self.context_budget,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let c = LlmConfig::from_toml_str("model = \"x\"\n[max_tokens]\nreflection = 10\n").unwrap();
        assert_eq!(c.model, "x");
        assert_eq!(c.max_tokens.reflection, 10);
        assert_eq!(c.max_tokens.strategy, 2048);
        assert_eq!(c.max_retries, 3);
    }

    #[test]
    fn overrides() {
        let c = LlmConfig::default().with_overrides(Some("http://h:1/v1".into()), Some("k".into()));
        assert_eq!(c.http_config().base_url, "http://h:1/v1");
        assert_eq!(c.api_key.as_deref(), Some("k"));
        let d = LlmConfig::default().with_overrides(Some(String::new()), None);
        assert_eq!(d.base_url, LlmConfig::default().base_url);
    }

    #[test]
    fn unknown_types_rejected() {
        assert!(LlmConfig::from_toml_str("timeout_secs = \"soon\"").is_err());
    }
}
