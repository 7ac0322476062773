//! Conservative prompt-size estimate.
//!
//! Tokenizers differ between models, so the estimate is a character-class
//! heuristic chosen to overcount typical BPE vocabularies:
//!
//! * each message costs 4 tokens of framing, and a non-empty request costs 3
//!   more for reply priming;
//! * a run of ASCII letters costs one token per 3 letters, rounded up;
//! * every digit, punctuation mark, newline and non-ASCII character costs 1;
//! * other whitespace is free.

use super::{ChatRequest, LlmError};

const PER_MESSAGE: usize = 4;
const REPLY_PRIMING: usize = 3;

fn text_cost(text: &str) -> usize {
    let mut cost = 0;
    let mut letters = 0usize;
    for c in text.chars() {
        if c.is_ascii_alphabetic() {
            letters += 1;
            continue;
        }
        cost += letters.div_ceil(3);
        letters = 0;
        if c == '\n' || !(c.is_ascii_whitespace()) {
            cost += 1;
        }
    }
    cost + letters.div_ceil(3)
}

pub fn count_budget(request: &ChatRequest) -> usize {
    if request.messages.is_empty() {
        return 0;
    }
    REPLY_PRIMING
        + request
            .messages
            .iter()
            .map(|m| PER_MESSAGE + text_cost(&m.content))
            .sum::<usize>()
}

/// Fails with [`LlmError::ContextLength`] when the estimate exceeds `budget`.
pub fn check_context(request: &ChatRequest, budget: Option<usize>) -> Result<(), LlmError> {
    let Some(budget) = budget else { return Ok(()) };
    let estimate = count_budget(request);
    if estimate > budget {
        return Err(LlmError::ContextLength(format!(
            "estimated {estimate} tokens, budget {budget}"
        )));
    }
    Ok(())
}
