use policy_refine::dsl::parse;
use policy_refine::env::TaskId;
use policy_refine::llm::{count_budget, ChatRequest};
use policy_refine::prompt::{
    extract_code, extract_rules, extract_strategy, render_code, render_rules, render_strategy, PromptError,
};

const P1_PROMPT: &str = include_str!("fixtures/cartpole_transcript/p1_prompt.txt");
const P1_RESPONSE: &str = include_str!("fixtures/cartpole_transcript/p1_response.txt");
const P2_PROMPT: &str = include_str!("fixtures/cartpole_transcript/p2_prompt.txt");
const P2_RESPONSE: &str = include_str!("fixtures/cartpole_transcript/p2_response.txt");
const P2_RULES: &str = include_str!("fixtures/cartpole_transcript/p2_rules.txt");
const P3_PROMPT: &str = include_str!("fixtures/cartpole_transcript/p3_prompt.txt");
const P3_RESPONSE: &str = include_str!("fixtures/cartpole_transcript/p3_response.txt");

const TASK: TaskId = TaskId::CartPoleStar2;

#[test]
fn strategy_prompt_matches_fixture() {
    assert_eq!(render_strategy(TASK).unwrap(), P1_PROMPT);
}

#[test]
fn rules_prompt_matches_fixture() {
    let strategy = extract_strategy(P1_RESPONSE).unwrap();
    assert!(strategy.starts_with("To succeed in this task"));
    assert!(strategy.contains("   - **Then** Move Right (2)"));
    assert_eq!(render_rules(TASK, &strategy).unwrap(), P2_PROMPT);
}

#[test]
fn code_prompt_matches_fixture() {
    let rules = extract_rules(P2_RESPONSE).unwrap();
    assert_eq!(rules, P2_RULES);
    assert_eq!(render_code(TASK, &rules).unwrap(), P3_PROMPT);
}

#[test]
fn code_response_parses_to_fixture_program() {
    let spec = TASK.spec();
    let extracted = extract_code(P3_RESPONSE, &spec).unwrap();
    let direct = parse(P3_RESPONSE, &spec).unwrap();
    assert_eq!(extracted.body, direct.body);
    assert!(extracted.uses_random_fallback);
}

#[test]
fn fenced_code_with_trailing_explanation() {
    let spec = TASK.spec();
    let mutated = format!(
        "```python\n{P3_RESPONSE}```\n\nThis function checks the pole angle first and falls back to a random action."
    );
    assert_eq!(
        extract_code(&mutated, &spec).unwrap().body,
        parse(P3_RESPONSE, &spec).unwrap().body
    );
}

#[test]
fn fenced_rules_are_unwrapped() {
    let wrapped = format!("Here are the rules:\n```\n{P2_RESPONSE}\n```\nLet me know!");
    assert_eq!(extract_rules(&wrapped).unwrap(), P2_RULES);
    assert_eq!(
        extract_rules("I apologize, but I cannot comply."),
        Err(PromptError::NoRules)
    );
}

#[test]
fn renamed_parameter_is_rejected() {
    let renamed = P3_RESPONSE.replace("pole_angular_velocity", "omega");
    let err = extract_code(&renamed, &TASK.spec()).unwrap_err();
    assert_eq!(err.kind, policy_refine::dsl::ParseErrorKind::ParameterMismatch);
}

#[test]
fn strategy_prompt_budget_is_pinned() {
    let request = ChatRequest::single("m", 0.0, P1_PROMPT, 2048);
    let first = count_budget(&request);
    assert_eq!(first, count_budget(&request.clone()));
    assert_eq!(first, 458);
}

mod reflection {
    use super::*;
    use policy_refine::dsl::run_episode;
    use policy_refine::prompt::{
        invalid_action_text, reflection_blocks, render_reflection, Ablation, P4Block, ReflectionContext,
        SensoryMotorWindow, StrategyScore,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn context(window_limit: usize) -> (ReflectionContext, Vec<String>) {
        let program = parse(P3_RESPONSE, &TASK.spec()).unwrap();
        let trace = run_episode(&program, 11, &mut ChaCha8Rng::seed_from_u64(11));
        let window = SensoryMotorWindow::from_trace(&trace, window_limit, 3);
        let invalid = trace.steps.last().and_then(|s| invalid_action_text(&s.action));
        let history = [49.85, 500.0, 116.1]
            .iter()
            .enumerate()
            .map(|(i, &r)| StrategyScore {
                rules_text: format!("{i}. If Pole Angle > {i} Then Move Right (2)"),
                mean_reward: r,
            })
            .collect();
        let ctx = ReflectionContext {
            history,
            window: Some(window),
            window_limit,
            eval_episodes: 20,
            invalid_action: invalid.or(Some("None".into())),
        };
        (ctx, trace.tail_lines(window_limit))
    }

    #[test]
    fn window_lines_equal_trace_export() {
        for limit in [5, 20, 50, 100] {
            let (ctx, expected) = context(limit);
            let text = render_reflection(TASK, &ctx, Ablation::Baseline).unwrap();
            let block = expected.join("\n");
            assert!(text.contains(&format!("Last {} steps", expected.len())));
            assert!(text.contains(&block), "window {limit} missing");
        }
    }

    #[test]
    fn ablations_remove_exactly_their_blocks() {
        let (ctx, _) = context(20);
        let baseline = reflection_blocks(TASK, &ctx, Ablation::Baseline).unwrap();
        let kinds: Vec<P4Block> = baseline.iter().map(|(b, _)| *b).collect();
        assert_eq!(
            kinds,
            [
                P4Block::Description,
                P4Block::History,
                P4Block::Current,
                P4Block::CurrentWindow,
                P4Block::Previous,
                P4Block::Best,
                P4Block::Instruction,
                P4Block::InvalidAction,
            ]
        );
        for ablation in Ablation::ALL {
            let ablated = reflection_blocks(TASK, &ctx, ablation).unwrap();
            let expected: Vec<_> = baseline
                .iter()
                .filter(|(b, _)| !ablation.excised().contains(b))
                .cloned()
                .collect();
            assert_eq!(ablated, expected, "{ablation}");
            let text = render_reflection(TASK, &ctx, ablation).unwrap();
            let joined: Vec<&str> = expected.iter().map(|(_, t)| t.as_str()).collect();
            assert_eq!(text, joined.join("\n\n"), "{ablation}");
            assert!(!text.contains("\n\n\n"), "{ablation}");
        }
    }

    #[test]
    fn ablation_contents() {
        let (ctx, _) = context(20);
        let render = |a| render_reflection(TASK, &ctx, a).unwrap();
        let no_motor = render(Ablation::NoSensoryMotorData);
        assert!(!no_motor.lines().any(|l| l.starts_with('[') && l.contains("];")));
        assert!(no_motor.contains("Your current overall strategy"));
        assert!(no_motor.contains("Your best overall strategy"));

        let only_best = render(Ablation::OnlyBestStrategyData);
        assert!(only_best.contains("Your best overall strategy so far was this one:\n1. If Pole Angle > 1"));
        assert!(only_best.contains("500.0/500"));
        assert!(!only_best.contains("current overall strategy"));
        assert!(!only_best.contains("Last "));

        let only_current = render(Ablation::OnlyCurrentStrategy);
        assert!(only_current.contains("Your current overall strategy was this one:\n2. If Pole Angle > 2"));
        assert!(only_current.contains("steps from a trial using this strategy"));
        assert!(!only_current.contains("previous overall"));
        assert!(!only_current.contains("best overall"));

        let no_data = render(Ablation::NoData);
        assert!(!no_data.contains("strategy was this one"));
        assert!(no_data.starts_with("The task description is:"));
    }

    #[test]
    fn rendering_is_idempotent() {
        let (ctx, _) = context(20);
        for ablation in Ablation::ALL {
            assert_eq!(
                render_reflection(TASK, &ctx, ablation).unwrap(),
                render_reflection(TASK, &ctx.clone(), ablation).unwrap()
            );
        }
        assert_eq!(render_strategy(TASK).unwrap(), render_strategy(TASK).unwrap());
    }
}
