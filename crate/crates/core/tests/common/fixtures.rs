//! The four-iteration cart-pole transcript as a scripted backend.

use policy_refine::env::{EnvOptions, Integrator, TaskId};
use policy_refine::llm::ScriptedBackend;
use policy_refine::refine::LoopConfig;

macro_rules! fixture {
    ($name:literal) => {
        include_str!(concat!("../fixtures/cartpole_transcript/", $name))
    };
}

pub const P1_PROMPT: &str = fixture!("p1_prompt.txt");
pub const P2_PROMPT: &str = fixture!("p2_prompt.txt");
pub const P3_PROMPT: &str = fixture!("p3_prompt.txt");
pub const P2_RULES: &str = fixture!("p2_rules.txt");
pub const ITER0_PROGRAM: &str = fixture!("p3_response.txt");
/// The final policy: a linear balancer that reaches the horizon.
pub const FINAL_PROGRAM: &str = fixture!("iter3_code.py");

/// Mean rewards printed alongside the transcript. They depend on the
/// original episode seeds and serve only as labels.
pub const LABELLED_MEANS: [f64; 4] = [49.85, 116.1, 296.55, 500.0];

/// Responses in request order: P1, P2, P3 for iteration 0, then P4, P2, P3
/// for each later iteration.
pub const RESPONSES: [&str; 12] = [
    fixture!("p1_response.txt"),
    fixture!("p2_response.txt"),
    fixture!("p3_response.txt"),
    fixture!("p4_response_1.txt"),
    fixture!("p2_response_1.txt"),
    fixture!("iter1_code.py"),
    fixture!("p4_response_2.txt"),
    fixture!("p2_response_2.txt"),
    fixture!("iter2_code.py"),
    fixture!("p4_response_3.txt"),
    fixture!("p2_response_3.txt"),
    fixture!("iter3_code.py"),
];

pub fn backend() -> ScriptedBackend {
    ScriptedBackend::new(RESPONSES)
}

/// Cart-pole with explicit Euler steps, the update order under which the
/// iteration-0 policy fails early as it does in the transcript.
pub fn config() -> LoopConfig {
    let mut config = LoopConfig::for_task(TaskId::CartPoleStar2, "scripted");
    config.epochs = 4;
    config.seed_root = 2025;
    config.env = EnvOptions {
        cartpole_integrator: Integrator::Euler,
        ..EnvOptions::default()
    };
    config
}
