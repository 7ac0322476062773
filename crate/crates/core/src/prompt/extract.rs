use once_cell::sync::Lazy;
use regex::Regex;

use super::PromptError;
use crate::dsl::{parse, ParseError, PolicyProgram};
use crate::env::EnvSpec;

static RULE_LINE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?i)^\s*(?:[-*•]|\d+[.)]|rule\s*\d+\s*[:.])?\s*(?:\*\*)?\s*(?:else\s*if|elif|if|else|otherwise|then|default)\b",
    )
    .expect("rule pattern")
});

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// The response with any markdown fence lines removed.
pub fn strip_fences(text: &str) -> String {
    text.lines()
        .filter(|l| !is_fence(l))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The strategy is free text; only surrounding whitespace is removed.
pub fn extract_strategy(response: &str) -> Result<String, PromptError> {
    let text = response.trim();
    if text.is_empty() {
        return Err(PromptError::EmptyResponse);
    }
    Ok(text.to_string())
}

/// Keeps the span from the first to the last rule-like line.
pub fn extract_rules(response: &str) -> Result<String, PromptError> {
    if response.trim().is_empty() {
        return Err(PromptError::EmptyResponse);
    }
    let stripped = strip_fences(response);
    let lines: Vec<&str> = stripped.lines().collect();
    let first = lines.iter().position(|l| RULE_LINE.is_match(l));
    let last = lines.iter().rposition(|l| RULE_LINE.is_match(l));
    match (first, last) {
        (Some(a), Some(b)) => Ok(lines[a..=b]
            .iter()
            .map(|l| l.trim_end())
            .collect::<Vec<_>>()
            .join("\n")),
        _ => Err(PromptError::NoRules),
    }
}

fn fenced_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        if is_fence(line) {
            match current.take() {
                Some(block) => blocks.push(block.join("\n")),
                None => current = Some(Vec::new()),
            }
        } else if let Some(block) = current.as_mut() {
            block.push(line);
        }
    }
    // An unterminated fence still counts.
    if let Some(block) = current {
        blocks.push(block.join("\n"));
    }
    blocks
}

fn starts_code(line: &str) -> bool {
    ["import ", "from ", "def "].iter().any(|k| line.starts_with(k))
}

/// Isolates the function definition in a response: the first fenced block
/// containing `def` (or the whole text), minus prose before the first
/// import/def line and anything after the function body.
pub fn isolate_code(response: &str) -> String {
    let body = fenced_blocks(response)
        .into_iter()
        .find(|b| b.contains("def "))
        .unwrap_or_else(|| response.to_string());
    let lines: Vec<&str> = body.lines().collect();
    let Some(start) = lines.iter().position(|l| starts_code(l)) else {
        return body.trim().to_string();
    };
    let def = (start..lines.len())
        .find(|&i| lines[i].starts_with("def "))
        .unwrap_or(start);
    let end = (def + 1..lines.len())
        .find(|&i| {
            let l = lines[i];
            !l.trim().is_empty() && !l.starts_with([' ', '\t', '#'])
        })
        .unwrap_or(lines.len());
    let mut code = lines[start..end].join("\n").trim_end().to_string();
    code.push('\n');
    code
}

/// Isolates and parses the policy function in a code response.
pub fn extract_code(response: &str, spec: &EnvSpec) -> Result<PolicyProgram, ParseError> {
    parse(&isolate_code(response), spec)
}
