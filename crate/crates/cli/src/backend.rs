use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use policy_refine::llm::{ChatBackend, HttpBackend, LlmConfig, ScriptedBackend};

#[derive(Args)]
pub struct BackendArgs {
    /// Endpoint settings (TOML); POLICY_REFINE_LLM_URL and
    /// POLICY_REFINE_LLM_KEY override the URL and key.
    #[arg(long)]
    llm: Option<PathBuf>,
    /// Answer from a JSON array of response strings instead of an endpoint.
    /// Every replication starts from the top of the script.
    #[arg(long, conflicts_with = "llm")]
    script: Option<PathBuf>,
}

impl BackendArgs {
    pub fn endpoint(&self) -> Result<LlmConfig> {
        let config = match &self.llm {
            Some(path) => LlmConfig::load(path)?,
            None => LlmConfig::default(),
        };
        Ok(config.with_env())
    }

    pub fn build(&self, endpoint: &LlmConfig) -> Result<Box<dyn ChatBackend>> {
        match &self.script {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let responses: Vec<String> =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                Ok(Box::new(ScriptedBackend::new(responses)))
            }
            None => Ok(Box::new(HttpBackend::new(endpoint.http_config())?)),
        }
    }
}
