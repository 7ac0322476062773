//! The refinement loop: one replication is an initial strategy (P1, P2, P3)
//! followed by evaluate, reflect (P4) and revise (P2, P3) cycles.
//!
//! Every random draw is keyed by `(seed_root, replication, iteration,
//! episode)` through [`crate::seed::derive_seed`], and every model exchange is
//! kept in the record's transcript, so a [`RunRecord`] can be replayed exactly
//! with [`replay`].

mod batch;
mod runner;
mod settings;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::PolicyProgram;
use crate::env::{EnvOptions, TaskId};
use crate::llm::{LlmError, StageTokens, MAX_TEMPERATURE};
use crate::prompt::{Ablation, CodeAttempt, SensoryMotorWindow, Stage, DEFAULT_REPAIR_BUDGET};

pub use batch::{read_records, run_batch, RecordSink};
pub use runner::{evaluate_strategy, replay, replay_backend, run_replication, Abort, Evaluation, Session};
pub use settings::{BatchSettings, LoopOverrides, SettingsError};

/// Sensory-motor window length used unless configured otherwise.
pub const DEFAULT_WINDOW: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("temperature {0} is outside [0, {MAX_TEMPERATURE}]")]
    Temperature(f64),
    #[error("model name is empty")]
    EmptyModel,
}

/// Everything that determines a replication apart from the backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub task: TaskId,
    pub model: String,
    pub temperature: f64,
    /// Total strategies per replication, the initial one included.
    pub epochs: usize,
    pub eval_episodes: usize,
    pub window_size: usize,
    pub ablation: Ablation,
    /// Stop once a strategy's mean reward reaches the task maximum.
    pub stop_on_max: bool,
    /// Responses allowed per stage before the replication is abandoned.
    pub repair_budget: usize,
    pub seed_root: u64,
    pub tokens: StageTokens,
    pub env: EnvOptions,
}

impl LoopConfig {
    /// Task-dependent defaults: the cart-pole family runs 100 epochs, the
    /// inverted pendulum 500 and the rest 50; the cart-pole tasks (inverted
    /// pendulum included) evaluate on 20 episodes, the rest on 10.
    pub fn for_task(task: TaskId, model: impl Into<String>) -> Self {
        let cart = task.is_cartpole_family() || task == TaskId::InvertedPendulum;
        LoopConfig {
            task,
            model: model.into(),
            temperature: 0.0,
            epochs: match task {
                TaskId::InvertedPendulum => 500,
                t if t.is_cartpole_family() => 100,
                _ => 50,
            },
            eval_episodes: if cart { 20 } else { 10 },
            window_size: DEFAULT_WINDOW,
            ablation: Ablation::Baseline,
            stop_on_max: task.spec().r_max.is_some(),
            repair_budget: DEFAULT_REPAIR_BUDGET,
            seed_root: 0,
            tokens: StageTokens::default(),
            env: EnvOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("epochs", self.epochs),
            ("eval_episodes", self.eval_episodes),
            ("window_size", self.window_size),
            ("repair_budget", self.repair_budget),
        ] {
            if value == 0 {
                return Err(ConfigError::Zero(name));
            }
        }
        if !(0.0..=MAX_TEMPERATURE).contains(&self.temperature) {
            return Err(ConfigError::Temperature(self.temperature));
        }
        if self.model.trim().is_empty() {
            return Err(ConfigError::EmptyModel);
        }
        Ok(())
    }
}

/// One evaluated strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub iteration: usize,
    pub strategy_text: String,
    pub rules_text: String,
    pub program: PolicyProgram,
    /// Arithmetic mean of `episode_returns`.
    pub mean_reward: f64,
    pub episode_returns: Vec<f64>,
    /// Tail of the worst-return episode, earliest on ties.
    pub window: SensoryMotorWindow,
    /// Rendering of the first invalid action met during evaluation.
    pub invalid_action: Option<String>,
    /// Code responses consumed, the accepted one included.
    pub repair_attempts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    AbortedRepairBudget,
    AbortedBackend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Reply {
    Text(String),
    Error(LlmError),
}

/// One request sent to the backend and what came back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub iteration: usize,
    pub stage: Stage,
    pub prompt: String,
    pub reply: Reply,
}

/// One replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub replication: usize,
    pub config: LoopConfig,
    pub status: RunStatus,
    pub abort_reason: Option<String>,
    /// Dense from iteration 0; empty only if initialization aborted.
    pub strategies: Vec<Strategy>,
    /// Code responses of a synthesis that exhausted its budget.
    pub rejected_code: Vec<CodeAttempt>,
    pub transcript: Vec<Exchange>,
    pub wall_clock: Duration,
}

impl RunRecord {
    pub fn task(&self) -> TaskId {
        self.config.task
    }

    /// Mean reward per iteration.
    pub fn rewards(&self) -> Vec<f64> {
        self.strategies.iter().map(|s| s.mean_reward).collect()
    }

    /// Index of the highest mean reward, earliest on ties.
    pub fn best_index(&self) -> Option<usize> {
        crate::prompt::best_index(
            &self
                .strategies
                .iter()
                .map(|s| crate::prompt::StrategyScore {
                    rules_text: String::new(),
                    mean_reward: s.mean_reward,
                })
                .collect::<Vec<_>>(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// Source of elapsed time, injectable so records can be reproduced exactly.
pub trait Clock: Send + Sync {
    /// Time since an arbitrary fixed origin.
    fn now(&self) -> Duration;
}

#[derive(Debug, Clone, Copy)]
pub struct SystemClock(Instant);

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock(Instant::now())
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

/// Never advances; every wall-clock measurement is zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now(&self) -> Duration {
        Duration::ZERO
    }
}
