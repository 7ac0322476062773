use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConfigError, LoopConfig};
use crate::env::{EnvOptions, TaskId};
use crate::llm::StageTokens;
use crate::prompt::Ablation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SettingsError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid settings: {0}")]
    Parse(String),
    #[error("`{0}` must list at least one entry")]
    Empty(&'static str),
    #[error("{task} / {model} / {temperature}: {error}")]
    Config {
        task: TaskId,
        model: String,
        temperature: f64,
        error: ConfigError,
    },
}

/// Loop parameters that replace the task defaults when present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopOverrides {
    pub epochs: Option<usize>,
    pub eval_episodes: Option<usize>,
    pub window_size: Option<usize>,
    pub ablation: Option<Ablation>,
    pub stop_on_max: Option<bool>,
    pub repair_budget: Option<usize>,
    pub seed_root: Option<u64>,
    pub tokens: Option<StageTokens>,
    pub env: Option<EnvOptions>,
}

impl LoopOverrides {
    pub fn apply(&self, config: &mut LoopConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { config.$field = v; })*
            };
        }
        set!(
            epochs,
            eval_episodes,
            window_size,
            ablation,
            stop_on_max,
            repair_budget,
            seed_root,
            tokens,
            env
        );
    }
}

/// The experiment matrix of a batch, as read from TOML:
///
/// ```toml
/// tasks = ["CartPoleStar1", "CartPoleStar2"]
/// models = ["qwen2.5:72b"]
/// temperatures = [0.0, 0.4, 0.8, 1.6, 3.2]
/// replications = 10
///
/// [loop]
/// epochs = 100
/// ablation = "no_best_strategy"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSettings {
    pub tasks: Vec<TaskId>,
    pub models: Vec<String>,
    #[serde(default = "default_temperatures")]
    pub temperatures: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default, rename = "loop")]
    pub overrides: LoopOverrides,
}

fn default_temperatures() -> Vec<f64> {
    vec![0.0]
}

fn default_replications() -> usize {
    1
}

impl BatchSettings {
    pub fn from_toml_str(text: &str) -> Result<Self, SettingsError> {
        toml::from_str(text).map_err(|e| SettingsError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SettingsError> {
        let text = std::fs::read_to_string(path).map_err(|e| SettingsError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    /// One validated config per task, model and temperature, in that
    /// nesting order.
    pub fn cells(&self) -> Result<Vec<LoopConfig>, SettingsError> {
        for (name, empty) in [
            ("tasks", self.tasks.is_empty()),
            ("models", self.models.is_empty()),
            ("temperatures", self.temperatures.is_empty()),
        ] {
            if empty {
                return Err(SettingsError::Empty(name));
            }
        }
        let mut cells = Vec::new();
        for &task in &self.tasks {
            for model in &self.models {
                for &temperature in &self.temperatures {
                    let mut config = LoopConfig::for_task(task, model.clone());
                    config.temperature = temperature;
                    self.overrides.apply(&mut config);
                    config.validate().map_err(|error| SettingsError::Config {
                        task,
                        model: model.clone(),
                        temperature,
                        error,
                    })?;
                    cells.push(config);
                }
            }
        }
        Ok(cells)
    }
}
