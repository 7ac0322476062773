//! The restricted policy language.
//!
//! Policies are single Python-style functions mapping the observation
//! variables of a task to an action. The grammar is loop-free and admits no
//! assignments and no calls other than `random.randint` and `random.uniform`,
//! so evaluation always terminates and cannot touch anything outside the
//! observation it is given.
//!
//! ```
//! use policy_refine::dsl::{parse, evaluate, PolicyResult};
//! use policy_refine::env::{Action, Observation, TaskId};
//! use rand::SeedableRng;
//!
//! let src = "def get_action(cart_position, cart_velocity, pole_angle, pole_angular_velocity):\n    \
//!            return 2 if pole_angle > 0 else 1\n";
//! let program = parse(src, &TaskId::CartPoleStar2.spec()).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let out = evaluate(&program, &Observation(vec![0.0, 0.0, 5.0, 0.0]), &mut rng);
//! assert_eq!(out.result, PolicyResult::Action(Action::Discrete(2)));
//! ```

mod ast;
mod episode;
mod eval;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::{EnvSpec, TaskId};

pub use ast::{BinOp, CmpOp, Expr, RandomFn, Stmt, UnaryOp};
pub use episode::{format_observation, run_episode, run_episode_with, EpisodeTrace, StepAction, TraceStep};
pub use eval::{evaluate, InvalidReason, PolicyOutcome, PolicyResult};
pub use parser::{parse_function, FunctionDef};
pub use printer::{print_expr, print_function};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Syntax,
    UnknownIdentifier,
    ParameterMismatch,
    BannedConstruct,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownIdentifier => "unknown identifier",
            ParseErrorKind::ParameterMismatch => "parameter mismatch",
            ParseErrorKind::BannedConstruct => "banned construct",
        })
    }
}

/// A rejection with a 1-based source position. The `Display` form is meant
/// to be pasted verbatim into a repair prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A validated policy bound to a task. Immutable after parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StoredProgram", into = "StoredProgram")]
pub struct PolicyProgram {
    pub task: TaskId,
    pub source_text: String,
    pub name: String,
    /// Always equal to the task's observation variable names.
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub uses_random_fallback: bool,
}

#[derive(Serialize, Deserialize)]
struct StoredProgram {
    task: TaskId,
    source: String,
}

impl TryFrom<StoredProgram> for PolicyProgram {
    type Error = ParseError;

    fn try_from(stored: StoredProgram) -> Result<Self, ParseError> {
        parse(&stored.source, &stored.task.spec())
    }
}

impl From<PolicyProgram> for StoredProgram {
    fn from(program: PolicyProgram) -> Self {
        StoredProgram {
            task: program.task,
            source: program.source_text,
        }
    }
}

impl PolicyProgram {
    /// The program rendered by the canonical printer.
    pub fn canonical_source(&self) -> String {
        print_function(&self.name, &self.params, &self.body)
    }
}

/// Parses `source` and checks its signature against the task's variables.
pub fn parse(source: &str, spec: &EnvSpec) -> Result<PolicyProgram, ParseError> {
    let def = parse_function(source)?;
    if def.params.len() != spec.obs_names.len() || def.params.iter().zip(&spec.obs_names).any(|(a, b)| a != b)
    {
        let (line, column) = def_position(source);
        return Err(ParseError {
            kind: ParseErrorKind::ParameterMismatch,
            line,
            column,
            message: format!(
                "the function parameters must be exactly ({}) in this order, found ({})",
                spec.obs_names.join(", "),
                def.params.join(", ")
            ),
        });
    }
    let uses_random_fallback = ast::block_uses_random(&def.body);
    Ok(PolicyProgram {
        task: spec.task,
        source_text: source.to_string(),
        name: def.name,
        params: def.params,
        body: def.body,
        uses_random_fallback,
    })
}

fn def_position(source: &str) -> (usize, usize) {
    source
        .lines()
        .enumerate()
        .find_map(|(i, l)| {
            let trimmed = l.trim_start();
            trimmed
                .starts_with("def ")
                .then(|| (i + 1, l.len() - trimmed.len() + 1))
        })
        .unwrap_or((1, 1))
}
