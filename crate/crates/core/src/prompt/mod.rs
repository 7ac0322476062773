//! Prompt rendering and response extraction.
//!
//! Each refinement step goes through up to four prompts: a free-text
//! strategy (P1, or the reflection prompt P4 on later iterations), its
//! IF-THEN-ELSE rules (P2) and their translation into a policy function (P3).
//! Templates live under `templates/` as plain text with `[Slot Name]`
//! markers; every slot must be resolved before a prompt is dispatched.
//!
//! The code prompt asks for the restricted policy language understood by
//! [`crate::dsl`] and names the two permitted random builtins.

mod extract;
mod repair;
pub mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{format_observation, EpisodeTrace, InvalidReason, StepAction};
use crate::env::{describe, ActionKind, TaskId};
use crate::llm::StageTokens;

pub use extract::{extract_code, extract_rules, extract_strategy, isolate_code, strip_fences};
pub use repair::{repair_loop, CodeAttempt, CodeSynthesis, DEFAULT_REPAIR_BUDGET};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("template {template} has no value for slot [{slot}]")]
    UnresolvedSlot { template: &'static str, slot: String },
    #[error("sensory-motor window has {len} steps, limit is {limit}")]
    WindowTooLong { len: usize, limit: usize },
    #[error("the reflection prompt needs at least one evaluated strategy")]
    EmptyHistory,
    #[error("the response is empty")]
    EmptyResponse,
    #[error("no IF-THEN-ELSE rules found in the response")]
    NoRules,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Strategy,
    Rules,
    Code,
    Repair,
    Reflection,
}

impl Stage {
    pub fn max_tokens(self, tokens: &StageTokens) -> u32 {
        match self {
            Stage::Strategy => tokens.strategy,
            Stage::Rules => tokens.rules,
            Stage::Code | Stage::Repair => tokens.code,
            Stage::Reflection => tokens.reflection,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Strategy => "strategy",
            Stage::Rules => "rules",
            Stage::Code => "code",
            Stage::Repair => "repair",
            Stage::Reflection => "reflection",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStep {
    pub observation: String,
    pub action: String,
}

/// The tail of one evaluation episode as shown to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensoryMotorWindow {
    pub steps: Vec<WindowStep>,
    /// Index of the episode within its evaluation batch.
    pub source_episode: usize,
    pub episode_return: f64,
}

impl SensoryMotorWindow {
    /// The last `limit` steps of `trace` (the whole episode if shorter).
    pub fn from_trace(trace: &EpisodeTrace, limit: usize, source_episode: usize) -> Self {
        let integer = trace.task.spec().integer_observations;
        let start = trace.steps.len().saturating_sub(limit);
        SensoryMotorWindow {
            steps: trace.steps[start..]
                .iter()
                .map(|s| WindowStep {
                    observation: format_observation(&s.observation, integer),
                    action: s.action.to_string(),
                })
                .collect(),
            source_episode,
            episode_return: trace.total_reward,
        }
    }

    pub fn lines(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| format!("{};{}", s.observation, s.action))
            .collect()
    }

    /// Keeps only the last `n` steps.
    pub fn tail(&self, n: usize) -> Self {
        let start = self.steps.len().saturating_sub(n);
        SensoryMotorWindow {
            steps: self.steps[start..].to_vec(),
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A previously evaluated strategy as it appears in the reflection prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyScore {
    pub rules_text: String,
    pub mean_reward: f64,
}

/// Everything the reflection prompt may draw on.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionContext {
    /// Oldest first; the last entry is the current strategy.
    pub history: Vec<StrategyScore>,
    /// Window from the current strategy's evaluation.
    pub window: Option<SensoryMotorWindow>,
    pub window_limit: usize,
    pub eval_episodes: usize,
    /// How the offending action rendered, if the current strategy produced
    /// an invalid action during evaluation.
    pub invalid_action: Option<String>,
}

/// Rendering of an invalid action in the feedback sentence.
pub fn invalid_action_text(action: &StepAction) -> Option<String> {
    match action {
        StepAction::Act(_) => None,
        StepAction::Invalid(InvalidReason::OutOfRange(v)) => Some(format!("{v}")),
        StepAction::Invalid(_) => Some("None".to_string()),
    }
}

/// The structural blocks of the reflection prompt, in rendering order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P4Block {
    Description,
    History,
    Current,
    CurrentWindow,
    Previous,
    Best,
    Instruction,
    InvalidAction,
}

/// Reflection-prompt ablations. Each removes a fixed set of blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Baseline,
    NoData,
    NoSensoryMotorData,
    NoPreviousStrategy,
    NoBestStrategy,
    OnlyCurrentStrategy,
    OnlyBestStrategyData,
}

impl Ablation {
    pub const ALL: [Ablation; 7] = [
        Ablation::Baseline,
        Ablation::NoData,
        Ablation::NoSensoryMotorData,
        Ablation::NoPreviousStrategy,
        Ablation::NoBestStrategy,
        Ablation::OnlyCurrentStrategy,
        Ablation::OnlyBestStrategyData,
    ];

    pub fn excised(self) -> &'static [P4Block] {
        use P4Block::*;
        match self {
            Ablation::Baseline => &[],
            Ablation::NoData => &[History, Current, CurrentWindow, Previous, Best, InvalidAction],
            Ablation::NoSensoryMotorData => &[CurrentWindow],
            Ablation::NoPreviousStrategy => &[Previous],
            Ablation::NoBestStrategy => &[Best],
            Ablation::OnlyCurrentStrategy => &[History, Previous, Best],
            Ablation::OnlyBestStrategyData => &[History, Current, CurrentWindow, Previous, InvalidAction],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Baseline => "Baseline",
            Ablation::NoData => "NoData",
            Ablation::NoSensoryMotorData => "NoSensoryMotorData",
            Ablation::NoPreviousStrategy => "NoPreviousStrategy",
            Ablation::NoBestStrategy => "NoBestStrategy",
            Ablation::OnlyCurrentStrategy => "OnlyCurrentStrategy",
            Ablation::OnlyBestStrategyData => "OnlyBestStrategyData",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ablation::ALL
            .into_iter()
            .find(|a| a.name().to_ascii_lowercase() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Ablation::ALL.iter().map(|a| a.name()).collect();
                format!("unknown ablation `{s}`; expected one of {}", names.join(", "))
            })
    }
}

/// Rounds to two decimals and prints the shortest form, keeping a decimal
/// point (`116.1`, `500.0`, `-0.35`).
pub fn format_number(v: f64) -> String {
    let rounded = (v * 100.0).round() / 100.0 + 0.0;
    let s = format!("{rounded}");
    if s.contains('.') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// A mean reward with the task maximum appended where one exists.
pub fn format_score(v: f64, task: TaskId) -> String {
    match task.spec().r_max {
        Some(max) => format!("{}/{}", format_number(v), max),
        None => format_number(v),
    }
}

fn number_word(n: usize) -> String {
    const WORDS: [&str; 11] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| w.to_string())
}

fn range_literal(v: f64) -> String {
    format!("{v:?}")
}

pub fn render_description(task: TaskId) -> Result<String, PromptError> {
    let d = describe(task);
    template::DESCRIPTION.fill(&d.slots())
}

/// P1: ask for a high-level strategy.
pub fn render_strategy(task: TaskId) -> Result<String, PromptError> {
    let d = describe(task);
    let description = render_description(task)?;
    template::P1_STRATEGY.fill(&[("Description", &description), ("Action Choice", &d.action_choice)])
}

/// P2: turn a strategy into IF-THEN-ELSE rules.
pub fn render_rules(task: TaskId, strategy: &str) -> Result<String, PromptError> {
    let d = describe(task);
    let description = render_description(task)?;
    template::P2_RULES.fill(&[
        ("Description", &description),
        ("Strategy", strategy),
        ("Action Choice", &d.action_choice),
    ])
}

fn code_instructions(task: TaskId) -> Result<String, PromptError> {
    let d = describe(task);
    let spec = task.spec();
    let random_action = match &spec.action_kind {
        ActionKind::Discrete { labels } => format!(
            "random.randint({}, {})",
            labels.iter().min().expect("labels"),
            labels.iter().max().expect("labels")
        ),
        ActionKind::Continuous { lo, hi } => {
            format!("random.uniform({}, {})", range_literal(*lo), range_literal(*hi))
        }
    };
    template::CODE_INSTRUCTIONS.fill(&[
        ("Parameters", &spec.obs_names.join(", ")),
        ("Observation Count", &number_word(spec.obs_dim)),
        ("Action Return", &d.action_return),
        ("Random Action", &random_action),
    ])
}

/// P3: translate rules into a policy function.
pub fn render_code(task: TaskId, rules: &str) -> Result<String, PromptError> {
    let description = render_description(task)?;
    let instructions = code_instructions(task)?;
    template::P3_CODE.fill(&[
        ("Description", &description),
        ("Rules", rules),
        ("Code Instructions", &instructions),
    ])
}

/// Repair prompt: the rules, the rejected code and the error it produced.
pub fn render_repair(task: TaskId, rules: &str, code: &str, error: &str) -> Result<String, PromptError> {
    let description = render_description(task)?;
    let instructions = code_instructions(task)?;
    template::REPAIR.fill(&[
        ("Description", &description),
        ("Rules", rules),
        ("Code", code.trim_end()),
        ("Error", error),
        ("Code Instructions", &instructions),
    ])
}

fn score_block(
    t: template::Template,
    s: &StrategyScore,
    ctx: &ReflectionContext,
    task: TaskId,
) -> Result<String, PromptError> {
    t.fill(&[
        ("Rules", &s.rules_text),
        ("Episodes", &ctx.eval_episodes.to_string()),
        ("Score", &format_score(s.mean_reward, task)),
    ])
}

/// Index of the highest mean reward, earliest on ties.
pub fn best_index(history: &[StrategyScore]) -> Option<usize> {
    history
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, s)| match best {
            Some((_, b)) if s.mean_reward <= b => best,
            _ => Some((i, s.mean_reward)),
        })
        .map(|(i, _)| i)
}

/// P4 as labelled blocks. Previous, best and the reward history appear once
/// at least two strategies have been evaluated.
pub fn reflection_blocks(
    task: TaskId,
    ctx: &ReflectionContext,
    ablation: Ablation,
) -> Result<Vec<(P4Block, String)>, PromptError> {
    let n = ctx.history.len();
    let current = ctx.history.last().ok_or(PromptError::EmptyHistory)?;
    if let Some(w) = &ctx.window {
        if w.len() > ctx.window_limit {
            return Err(PromptError::WindowTooLong {
                len: w.len(),
                limit: ctx.window_limit,
            });
        }
    }
    let d = describe(task);
    let excised = ablation.excised();
    let mut blocks = Vec::new();
    let mut push = |block: P4Block, text: String| {
        if !excised.contains(&block) {
            blocks.push((block, text));
        }
    };
    push(P4Block::Description, render_description(task)?);
    if n >= 2 {
        let rewards: Vec<String> = ctx.history.iter().map(|s| format_number(s.mean_reward)).collect();
        push(
            P4Block::History,
            template::P4_HISTORY.fill(&[
                ("Strategy Count", &n.to_string()),
                ("Reward Sequence", &format!("[{}]", rewards.join(", "))),
            ])?,
        );
    }
    push(
        P4Block::Current,
        score_block(template::P4_CURRENT, current, ctx, task)?,
    );
    if let Some(w) = ctx.window.as_ref().filter(|w| !w.is_empty()) {
        push(
            P4Block::CurrentWindow,
            template::P4_WINDOW
                .fill(&[("Steps", &w.len().to_string()), ("Window", &w.lines().join("\n"))])?,
        );
    }
    if n >= 2 {
        push(
            P4Block::Previous,
            score_block(template::P4_PREVIOUS, &ctx.history[n - 2], ctx, task)?,
        );
        let best = best_index(&ctx.history).expect("non-empty history");
        push(
            P4Block::Best,
            score_block(template::P4_BEST, &ctx.history[best], ctx, task)?,
        );
    }
    push(
        P4Block::Instruction,
        template::P4_INSTRUCTION.fill(&[("Improvement Goal", &d.improvement_goal)])?,
    );
    if let Some(value) = &ctx.invalid_action {
        push(
            P4Block::InvalidAction,
            template::P4_INVALID.fill(&[
                ("Action Expectation", &d.action_expectation),
                ("Invalid Value", value),
            ])?,
        );
    }
    Ok(blocks)
}

/// P4: reflect on past strategies and propose a new one.
pub fn render_reflection(
    task: TaskId,
    ctx: &ReflectionContext,
    ablation: Ablation,
) -> Result<String, PromptError> {
    let blocks = reflection_blocks(task, ctx, ablation)?;
    Ok(blocks
        .into_iter()
        .map(|(_, t)| t)
        .collect::<Vec<_>>()
        .join("\n\n"))
}
