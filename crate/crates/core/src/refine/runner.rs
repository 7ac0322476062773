use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Clock, ConfigError, Exchange, LoopConfig, Reply, RunRecord, RunStatus, Strategy};
use crate::dsl::{run_episode_with, EpisodeTrace, PolicyProgram};
use crate::env::{Environment, TaskId};
use crate::llm::{ChatBackend, ChatRequest, LlmError, ScriptedBackend};
use crate::prompt::{
    extract_rules, extract_strategy, invalid_action_text, render_reflection, render_rules, render_strategy,
    repair_loop, CodeAttempt, PromptError, ReflectionContext, SensoryMotorWindow, Stage, StrategyScore,
};
use crate::seed::{derive_seed, stream};

/// Why a replication stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum Abort {
    /// A stage used its whole response budget without a usable artifact.
    RepairBudget(String),
    /// The backend failed twice in a row on the same prompt.
    Backend(LlmError),
}

/// Returns of a strategy over the configured evaluation episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub returns: Vec<f64>,
    pub mean: f64,
    pub window: SensoryMotorWindow,
    pub invalid_action: Option<String>,
}

fn episode_seed(config: &LoopConfig, replication: usize, iteration: usize, episode: usize) -> u64 {
    derive_seed(
        config.seed_root,
        &[
            stream::EPISODE,
            replication as u64,
            iteration as u64,
            episode as u64,
        ],
    )
}

/// Runs `program` on the evaluation episodes of one iteration.
pub fn evaluate_strategy(
    config: &LoopConfig,
    replication: usize,
    iteration: usize,
    program: &PolicyProgram,
) -> Evaluation {
    let traces: Vec<EpisodeTrace> = (0..config.eval_episodes)
        .map(|ep| {
            let policy_seed = derive_seed(
                config.seed_root,
                &[stream::POLICY, replication as u64, iteration as u64, ep as u64],
            );
            let mut rng = ChaCha8Rng::seed_from_u64(policy_seed);
            run_episode_with(
                program,
                &config.env,
                episode_seed(config, replication, iteration, ep),
                &mut rng,
            )
        })
        .collect();
    let returns: Vec<f64> = traces.iter().map(|t| t.total_reward).collect();
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let worst = (1..returns.len()).fold(0, |w, i| if returns[i] < returns[w] { i } else { w });
    let invalid_action = traces
        .iter()
        .find(|t| t.ended_invalid())
        .and_then(|t| t.steps.last())
        .and_then(|s| invalid_action_text(&s.action));
    Evaluation {
        window: SensoryMotorWindow::from_trace(&traces[worst], config.window_size, worst),
        returns,
        mean,
        invalid_action,
    }
}

fn reached_max(task: TaskId, mean: f64) -> bool {
    task.spec().r_max.is_some_and(|max| mean >= max)
}

/// The model-facing half of a replication; owns the transcript.
pub struct Session<'a> {
    config: &'a LoopConfig,
    backend: &'a dyn ChatBackend,
    replication: usize,
    iteration: usize,
    transcript: Vec<Exchange>,
    rejected_code: Vec<CodeAttempt>,
}

impl<'a> Session<'a> {
    pub fn new(config: &'a LoopConfig, backend: &'a dyn ChatBackend, replication: usize) -> Self {
        Session {
            config,
            backend,
            replication,
            iteration: 0,
            transcript: Vec::new(),
            rejected_code: Vec::new(),
        }
    }

    pub fn transcript(&self) -> &[Exchange] {
        &self.transcript
    }

    fn send(&mut self, stage: Stage, prompt: &str) -> Result<String, LlmError> {
        let c = self.config;
        let mut request = ChatRequest::single(&c.model, c.temperature, prompt, stage.max_tokens(&c.tokens));
        request.request_seed = Some(derive_seed(
            c.seed_root,
            &[
                stream::REQUEST,
                self.replication as u64,
                self.transcript.len() as u64,
            ],
        ));
        let result = self.backend.complete(&request).map(|r| r.text);
        self.transcript.push(Exchange {
            iteration: self.iteration,
            stage,
            prompt: prompt.to_string(),
            reply: match &result {
                Ok(text) => Reply::Text(text.clone()),
                Err(e) => Reply::Error(e.clone()),
            },
        });
        result
    }

    /// One retry after a failure. Context overflows return at once so the
    /// caller can shrink the prompt instead.
    fn ask(&mut self, stage: Stage, prompt: &str) -> Result<String, LlmError> {
        match self.send(stage, prompt) {
            Err(e) if !matches!(e, LlmError::ContextLength(_)) => {
                log::warn!("{stage} request failed ({e}); retrying once");
                self.send(stage, prompt)
            }
            other => other,
        }
    }

    /// Re-sends `prompt` until `extract` accepts a response, within the
    /// repair budget.
    fn ask_until<T>(
        &mut self,
        stage: Stage,
        prompt: &str,
        extract: impl Fn(&str) -> Result<T, PromptError>,
    ) -> Result<T, Abort> {
        let budget = self.config.repair_budget;
        for attempt in 1..=budget {
            let text = self.ask(stage, prompt).map_err(Abort::Backend)?;
            match extract(&text) {
                Ok(value) => return Ok(value),
                Err(e) => log::debug!("{stage} response {attempt} unusable: {e}"),
            }
        }
        Err(Abort::RepairBudget(format!(
            "no usable {stage} response in {budget} attempts"
        )))
    }

    /// P2 and P3 for a strategy text, then evaluation.
    fn revise(&mut self, strategy_text: String) -> Result<Strategy, Abort> {
        let c = self.config;
        let prompt = render_rules(c.task, &strategy_text).expect("rules template resolves");
        let rules_text = self.ask_until(Stage::Rules, &prompt, extract_rules)?;
        let smoke = Environment::with_options(c.task, c.env).reset(episode_seed(
            c,
            self.replication,
            self.iteration,
            0,
        ));
        let synthesis = repair_loop(c.task, &rules_text, Some(&smoke), c.repair_budget, |stage, p| {
            self.ask(stage, p)
        })
        .map_err(Abort::Backend)?;
        let repair_attempts = synthesis.attempts.len();
        let Some(program) = synthesis.program else {
            self.rejected_code = synthesis.attempts;
            return Err(Abort::RepairBudget(format!(
                "no valid policy code in {repair_attempts} attempts"
            )));
        };
        let eval = evaluate_strategy(c, self.replication, self.iteration, &program);
        log::info!(
            "{} replication {} iteration {}: mean reward {}",
            c.task,
            self.replication,
            self.iteration,
            eval.mean
        );
        Ok(Strategy {
            iteration: self.iteration,
            strategy_text,
            rules_text,
            program,
            mean_reward: eval.mean,
            episode_returns: eval.returns,
            window: eval.window,
            invalid_action: eval.invalid_action,
            repair_attempts,
        })
    }

    /// Iteration 0: P1, P2, P3 and evaluation.
    pub fn initialize(&mut self) -> Result<Strategy, Abort> {
        self.iteration = 0;
        let prompt = render_strategy(self.config.task).expect("strategy template resolves");
        let text = self.ask_until(Stage::Strategy, &prompt, extract_strategy)?;
        self.revise(text)
    }

    /// The next iteration: P4 over `history`, then P2, P3 and evaluation.
    /// A context overflow halves the window until it fits or is gone.
    pub fn refine(&mut self, history: &[Strategy]) -> Result<Strategy, Abort> {
        let current = history.last().expect("refine needs a strategy to improve");
        self.iteration = history.len();
        let c = self.config;
        let scores: Vec<StrategyScore> = history
            .iter()
            .map(|s| StrategyScore {
                rules_text: s.rules_text.clone(),
                mean_reward: s.mean_reward,
            })
            .collect();
        let mut limit = c.window_size;
        let text = loop {
            let ctx = ReflectionContext {
                history: scores.clone(),
                window: (limit > 0).then(|| current.window.tail(limit)),
                window_limit: limit,
                eval_episodes: c.eval_episodes,
                invalid_action: current.invalid_action.clone(),
            };
            let prompt = render_reflection(c.task, &ctx, c.ablation).expect("reflection renders");
            match self.ask_until(Stage::Reflection, &prompt, extract_strategy) {
                Err(Abort::Backend(LlmError::ContextLength(_))) if limit > 0 => {
                    limit /= 2;
                    log::warn!("reflection prompt too long; window reduced to {limit} steps");
                }
                other => break other?,
            }
        };
        self.revise(text)
    }
}

fn drive(
    session: &mut Session<'_>,
    config: &LoopConfig,
    strategies: &mut Vec<Strategy>,
) -> Result<(), Abort> {
    strategies.push(session.initialize()?);
    while strategies.len() < config.epochs {
        let last = strategies.last().expect("initialized");
        if config.stop_on_max && reached_max(config.task, last.mean_reward) {
            break;
        }
        let next = session.refine(strategies)?;
        strategies.push(next);
    }
    Ok(())
}

/// Runs one replication to completion or abort.
pub fn run_replication(
    config: &LoopConfig,
    backend: &dyn ChatBackend,
    replication: usize,
    clock: &dyn Clock,
) -> Result<RunRecord, ConfigError> {
    config.validate()?;
    let start = clock.now();
    let mut session = Session::new(config, backend, replication);
    let mut strategies = Vec::new();
    let (status, abort_reason) = match drive(&mut session, config, &mut strategies) {
        Ok(()) => (RunStatus::Completed, None),
        Err(Abort::RepairBudget(reason)) => (RunStatus::AbortedRepairBudget, Some(reason)),
        Err(Abort::Backend(e)) => (RunStatus::AbortedBackend, Some(e.to_string())),
    };
    if let Some(reason) = &abort_reason {
        log::warn!("{} replication {replication} aborted: {reason}", config.task);
    }
    Ok(RunRecord {
        replication,
        config: config.clone(),
        status,
        abort_reason,
        strategies,
        rejected_code: session.rejected_code,
        transcript: session.transcript,
        wall_clock: clock.now().saturating_sub(start),
    })
}

/// A backend that answers with the record's transcript, failures included.
pub fn replay_backend(record: &RunRecord) -> ScriptedBackend {
    ScriptedBackend::from_results(record.transcript.iter().map(|e| match &e.reply {
        Reply::Text(text) => Ok(text.clone()),
        Reply::Error(err) => Err(err.clone()),
    }))
}

/// Re-runs a record against its own transcript.
pub fn replay(record: &RunRecord, clock: &dyn Clock) -> Result<RunRecord, ConfigError> {
    run_replication(&record.config, &replay_backend(record), record.replication, clock)
}
