//! A stage-aware backend for driving the loop without transcripts.

use std::sync::atomic::{AtomicUsize, Ordering};

use policy_refine::llm::{ChatBackend, ChatRequest, FnBackend};
use policy_refine::prompt::Stage;

pub const BALANCE: &str = "def get_action(cart_position, cart_velocity, pole_angle, pole_angular_velocity):\n    if pole_angle + 0.5 * pole_angular_velocity + 0.05 * cart_position + 0.1 * cart_velocity > 0:\n        return 1\n    return 0\n";
pub const LEAN: &str = "def get_action(cart_position, cart_velocity, pole_angle, pole_angular_velocity):\n    if pole_angle > 0.05:\n        return 1\n    return 0\n";
pub const LEFT: &str =
    "def get_action(cart_position, cart_velocity, pole_angle, pole_angular_velocity):\n    return 0\n";
pub const BROKEN: &str = "def get_action(cart_position, cart_velocity, pole_angle, pole_angular_velocity):\n    while True:\n        return 0\n";

pub fn stage_of(prompt: &str) -> Stage {
    if prompt.contains("Extract the IF-THEN-ELSE rules") {
        Stage::Rules
    } else if prompt.contains("Here are a set of IF-THEN-ELSE rules") {
        Stage::Code
    } else {
        Stage::Strategy
    }
}

/// Answers by stage: numbered strategies and rules, and the given code
/// responses in order (the last one repeats).
pub fn staged(codes: Vec<&'static str>) -> impl ChatBackend {
    let strategies = AtomicUsize::new(0);
    let rules = AtomicUsize::new(0);
    let code = AtomicUsize::new(0);
    FnBackend::new(move |req: &ChatRequest| {
        Ok(match stage_of(req.prompt()) {
            Stage::Strategy => format!(
                "Strategy {}: push toward the lean.",
                strategies.fetch_add(1, Ordering::SeqCst)
            ),
            Stage::Rules => format!(
                "IF pole_angle > {} THEN push right (1)\nELSE push left (0)",
                rules.fetch_add(1, Ordering::SeqCst)
            ),
            _ => {
                let i = code.fetch_add(1, Ordering::SeqCst);
                codes[i.min(codes.len() - 1)].to_string()
            }
        })
    })
}
