use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::extract::isolate_code;
use super::{render_code, render_repair, Stage};
use crate::dsl::{evaluate, format_observation, parse, InvalidReason, PolicyProgram, PolicyResult};
use crate::env::{Observation, TaskId};

/// Code responses allowed per strategy, the first one included.
pub const DEFAULT_REPAIR_BUDGET: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeAttempt {
    pub stage: Stage,
    pub response: String,
    /// Why the response was rejected; `None` for the accepted one.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeSynthesis {
    /// `None` when the budget ran out.
    pub program: Option<PolicyProgram>,
    pub attempts: Vec<CodeAttempt>,
}

fn smoke_test(program: &PolicyProgram, obs: &Observation) -> Result<(), String> {
    let out = evaluate(program, obs, &mut ChaCha8Rng::seed_from_u64(0));
    match out.result {
        PolicyResult::Invalid(InvalidReason::RuntimeError(msg)) => Err(format!(
            "calling the function with the observation {} failed: {msg}",
            format_observation(obs, program.task.spec().integer_observations)
        )),
        _ => Ok(()),
    }
}

/// Requests code for `rules` and re-prompts with the error until a response
/// parses, for at most `budget` responses in total.
///
/// `ask` sends one prompt and returns the response text; its errors abort
/// the loop. When `smoke` is given, an accepted program must also evaluate
/// on it without a runtime error.
pub fn repair_loop<E, F>(
    task: TaskId,
    rules: &str,
    smoke: Option<&Observation>,
    budget: usize,
    mut ask: F,
) -> Result<CodeSynthesis, E>
where
    F: FnMut(Stage, &str) -> Result<String, E>,
{
    let spec = task.spec();
    let mut stage = Stage::Code;
    let mut prompt = render_code(task, rules).expect("code templates resolve");
    let mut attempts = Vec::new();
    while attempts.len() < budget {
        let response = ask(stage, &prompt)?;
        let code = isolate_code(&response);
        let checked = parse(&code, &spec)
            .map_err(|e| e.to_string())
            .and_then(|p| match smoke {
                Some(obs) => smoke_test(&p, obs).map(|_| p),
                None => Ok(p),
            });
        match checked {
            Ok(program) => {
                attempts.push(CodeAttempt {
                    stage,
                    response,
                    error: None,
                });
                return Ok(CodeSynthesis {
                    program: Some(program),
                    attempts,
                });
            }
            Err(error) => {
                log::debug!("code attempt {} rejected: {error}", attempts.len() + 1);
                let shown = if code.trim().is_empty() {
                    response.as_str()
                } else {
                    code.as_str()
                };
                prompt = render_repair(task, rules, shown, &error).expect("repair template resolves");
                stage = Stage::Repair;
                attempts.push(CodeAttempt {
                    stage: if attempts.is_empty() {
                        Stage::Code
                    } else {
                        Stage::Repair
                    },
                    response,
                    error: Some(error),
                });
            }
        }
    }
    Ok(CodeSynthesis {
        program: None,
        attempts,
    })
}
