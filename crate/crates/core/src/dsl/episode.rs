//! Policy rollouts and their textual traces.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate, InvalidReason, PolicyResult};
use super::PolicyProgram;
use crate::env::{Action, EnvOptions, Environment, Observation, TaskId, TerminationCause};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    Act(Action),
    Invalid(InvalidReason),
}

impl fmt::Display for StepAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepAction::Act(a) => write!(f, "{a}"),
            StepAction::Invalid(InvalidReason::OutOfRange(v)) => write!(f, "{v}"),
            StepAction::Invalid(_) => f.write_str("None"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub index: usize,
    /// The observation the policy acted on.
    pub observation: Observation,
    pub action: StepAction,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub used_random: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub task: TaskId,
    pub seed: u64,
    pub steps: Vec<TraceStep>,
    pub total_reward: f64,
    pub termination_cause: TerminationCause,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn ended_invalid(&self) -> bool {
        self.termination_cause == TerminationCause::InvalidAction
    }

    /// One `[obs];action` line per step, the format shown to the model.
    pub fn lines(&self) -> Vec<String> {
        let integer = self.task.spec().integer_observations;
        self.steps
            .iter()
            .map(|s| format!("{};{}", format_observation(&s.observation, integer), s.action))
            .collect()
    }

    /// The last `n` trace lines (all of them if the episode is shorter).
    pub fn tail_lines(&self, n: usize) -> Vec<String> {
        let lines = self.lines();
        let start = lines.len().saturating_sub(n);
        lines[start..].to_vec()
    }

    /// One JSON object per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("trace steps serialize"));
            out.push('\n');
        }
        out
    }
}

/// Renders an observation like a numpy array: entries right-aligned to a
/// common width and separated by a single space.
pub fn format_observation(obs: &Observation, integer: bool) -> String {
    let cells: Vec<String> = obs
        .values()
        .iter()
        .map(|v| {
            if integer {
                format!("{}", *v as i64)
            } else {
                format!("{:.4}", v + 0.0)
            }
        })
        .collect();
    let width = cells.iter().map(String::len).max().unwrap_or(0);
    let padded: Vec<String> = cells.iter().map(|c| format!("{c:>width$}")).collect();
    format!("[{}]", padded.join(" "))
}

/// Rolls out `program` on its own task from `seed`, drawing policy
/// randomness from `rng`.
pub fn run_episode<R: RngCore>(program: &PolicyProgram, seed: u64, rng: &mut R) -> EpisodeTrace {
    run_episode_with(program, &EnvOptions::default(), seed, rng)
}

pub fn run_episode_with<R: RngCore>(
    program: &PolicyProgram,
    options: &EnvOptions,
    seed: u64,
    rng: &mut R,
) -> EpisodeTrace {
    let mut env = Environment::with_options(program.task, *options);
    let mut obs = env.reset(seed);
    let mut steps = Vec::new();
    let mut total_reward = 0.0;
    let termination_cause = loop {
        let outcome = evaluate(program, &obs, rng);
        let index = steps.len();
        match outcome.result {
            PolicyResult::Invalid(reason) => {
                steps.push(TraceStep {
                    index,
                    observation: obs,
                    action: StepAction::Invalid(reason),
                    reward: 0.0,
                    terminated: true,
                    truncated: false,
                    used_random: outcome.used_random,
                });
                break TerminationCause::InvalidAction;
            }
            PolicyResult::Action(action) => {
                let result = env
                    .step(&action)
                    .expect("evaluator only yields actions the task accepts");
                total_reward += result.reward;
                steps.push(TraceStep {
                    index,
                    observation: obs,
                    action: StepAction::Act(action),
                    reward: result.reward,
                    terminated: result.terminated,
                    truncated: result.truncated,
                    used_random: outcome.used_random,
                });
                if result.done() {
                    break result.termination_cause;
                }
                obs = result.observation;
            }
        }
    };
    EpisodeTrace {
        task: program.task,
        seed,
        steps,
        total_reward,
        termination_cause,
    }
}
