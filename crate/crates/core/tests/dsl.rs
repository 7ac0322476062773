mod common;

use policy_refine::dsl::{
    evaluate, parse, parse_function, print_function, run_episode, InvalidReason, ParseErrorKind,
    PolicyProgram, PolicyResult, StepAction,
};
use policy_refine::env::{Action, Observation, TaskId, TerminationCause};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ITER0: &str = include_str!("fixtures/cartpole_transcript/p3_response.txt");

const CART_PARAMS: &str = "cart_position, cart_velocity, pole_angle, pole_angular_velocity";

#[test]
fn iteration0_program_parses() {
    let p = parse(ITER0, &TaskId::CartPoleStar2.spec()).unwrap();
    assert!(p.uses_random_fallback);
    assert_eq!(p.name, "get_action");
    assert_eq!(p.params.join(", "), CART_PARAMS);
}

#[test]
fn first_rule_fires_on_positive_angle() {
    let p = parse(ITER0, &TaskId::CartPoleStar2.spec()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let out = evaluate(&p, &Observation(vec![0.0, 0.0, 5.0, 0.0]), &mut rng);
    assert_eq!(out.result, PolicyResult::Action(Action::Discrete(2)));
    assert!(!out.used_random);
}

#[test]
fn random_fallback_replays_with_same_seed() {
    let p = parse(ITER0, &TaskId::CartPoleStar2.spec()).unwrap();
    let zero = Observation(vec![0.0; 4]);
    for seed in 0..20 {
        let a = evaluate(&p, &zero, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = evaluate(&p, &zero, &mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(a, b);
        assert!(a.used_random);
    }
    let draws: std::collections::HashSet<_> = (0..50)
        .map(|s| {
            format!(
                "{:?}",
                evaluate(&p, &zero, &mut ChaCha8Rng::seed_from_u64(s)).result
            )
        })
        .collect();
    assert_eq!(draws.len(), 2, "both labels reachable through the fallback");
}

#[test]
fn stride_ten_grid_matches_oracle() {
    assert_eq!(common::checks::iter0_grid(), Ok(14_641));
}

#[test]
fn grammar_violations() {
    let spec = TaskId::CartPoleStar2.spec();
    let e = parse("def f(a): return", &spec).unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::Syntax);
    let e = parse(
        &format!("def get_action({CART_PARAMS}): while True: return 1"),
        &spec,
    )
    .unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::BannedConstruct);
    let e = parse(&ITER0.replace("cart_velocity", "cart_speed"), &spec).unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::ParameterMismatch);
    let e = parse(&ITER0.replace("pole_angle > 0", "angle > 0"), &spec).unwrap_err();
    assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier);
    assert_eq!(e.line, 4);
}

#[test]
fn fenced_prose_is_not_code() {
    let spec = TaskId::CartPoleStar2.spec();
    assert!(parse(&format!("```python\n{ITER0}```"), &spec).is_err());
}

#[test]
fn missing_final_branch_records_none() {
    // Every rule is guarded, so the policy falls through once the pole
    // angle is zero and the angular velocity small.
    let src = format!(
        "def get_action({CART_PARAMS}):\n    if pole_angle > 0 and pole_angular_velocity > 5:\n        return 2\n    elif pole_angle < 0 and pole_angular_velocity < -5:\n        return 1\n    elif pole_angle > 0:\n        return 1\n    elif pole_angle < 0:\n        return 2\n"
    );
    let p = parse(&src, &TaskId::CartPoleStar2.spec()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let trace = (0..200)
        .map(|seed| run_episode(&p, seed, &mut rng))
        .find(|t| t.ended_invalid())
        .expect("some episode falls through");
    let last = trace.steps.last().unwrap();
    assert_eq!(last.action, StepAction::Invalid(InvalidReason::NoRuleFired));
    assert_eq!(last.reward, 0.0);
    assert!(trace.lines().last().unwrap().ends_with("];None"));
    assert_eq!(trace.total_reward, (trace.len() - 1) as f64);
}

#[test]
fn balancing_policy_reaches_the_horizon() {
    let src = format!(
        "def get_action({CART_PARAMS}):\n    if pole_angle + 0.5 * pole_angular_velocity + 0.05 * cart_position + 0.1 * cart_velocity > 0:\n        return 1\n    return 0\n"
    );
    let p = parse(&src, &TaskId::CartPole.spec()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for seed in 0..10 {
        let t = run_episode(&p, seed, &mut rng);
        assert_eq!(t.len(), 500, "seed {seed}");
        assert_eq!(t.total_reward, 500.0);
        assert_eq!(t.termination_cause, TerminationCause::StepLimit);
    }
}

#[test]
fn empty_body_is_immediately_invalid() {
    let src = format!("def get_action({CART_PARAMS}):\n    \"\"\"Nothing yet.\"\"\"\n");
    let p = parse(&src, &TaskId::CartPoleStar1.spec()).unwrap();
    let t = run_episode(&p, 3, &mut ChaCha8Rng::seed_from_u64(0));
    assert_eq!((t.len(), t.total_reward), (1, 0.0));
}

#[test]
fn episodes_replay_bit_identically() {
    let p = parse(ITER0, &TaskId::CartPoleStar2.spec()).unwrap();
    for seed in 0..5 {
        let a = run_episode(&p, seed, &mut ChaCha8Rng::seed_from_u64(seed + 100));
        let b = run_episode(&p, seed, &mut ChaCha8Rng::seed_from_u64(seed + 100));
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }
}

fn name() -> impl Strategy<Value = String> {
    prop_oneof![Just("a"), Just("b"), Just("c")].prop_map(String::from)
}

fn expr_src() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        name(),
        (0u32..1000).prop_map(|n| n.to_string()),
        (0u32..1000, 1u32..100).prop_map(|(a, b)| format!("{a}.{b}")),
        Just("True".to_string()),
        Just("None".to_string()),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (
                inner.clone(),
                prop_oneof![
                    Just("+"),
                    Just("-"),
                    Just("*"),
                    Just("/"),
                    Just("and"),
                    Just("or"),
                    Just("<"),
                    Just(">="),
                    Just("==")
                ],
                inner.clone()
            )
                .prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            (prop_oneof![Just("-"), Just("not "), Just("+")], inner.clone())
                .prop_map(|(op, a)| format!("({op}({a}))")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(a, b, c)| format!("({a} if {b} else {c})")),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(a, b, c)| format!("({a} < {b} <= {c})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("random.uniform({a}, {b})")),
        ]
    })
}

fn block_src(depth: u32) -> BoxedStrategy<Vec<String>> {
    let ret = expr_src().prop_map(|e| vec![format!("return {e}")]);
    if depth == 0 {
        return ret.boxed();
    }
    let nested = (
        expr_src(),
        block_src(depth - 1),
        proptest::option::of((expr_src(), block_src(depth - 1))),
        proptest::option::of(block_src(depth - 1)),
    )
        .prop_map(|(c, body, elif, orelse)| {
            let ind = |b: Vec<String>| b.into_iter().map(|l| format!("    {l}")).collect::<Vec<_>>();
            let mut lines = vec![format!("if {c}:")];
            lines.extend(ind(body));
            if let Some((c2, b2)) = elif {
                lines.push(format!("elif {c2}:"));
                lines.extend(ind(b2));
            }
            if let Some(b3) = orelse {
                lines.push("else:".to_string());
                lines.extend(ind(b3));
            }
            lines
        });
    proptest::collection::vec(prop_oneof![ret, nested], 1..4)
        .prop_map(|blocks| blocks.concat())
        .boxed()
}

proptest! {
    #[test]
    fn printer_round_trips(lines in block_src(2)) {
        let src = format!(
            "def f(a, b, c):\n{}\n",
            lines.iter().map(|l| format!("    {l}")).collect::<Vec<_>>().join("\n")
        );
        let parsed = parse_function(&src).unwrap();
        let printed = print_function(&parsed.name, &parsed.params, &parsed.body);
        let reparsed = parse_function(&printed).unwrap();
        prop_assert_eq!(&reparsed, &parsed);
        prop_assert_eq!(print_function(&reparsed.name, &reparsed.params, &reparsed.body), printed);
    }

    #[test]
    fn evaluation_is_total(obs in proptest::collection::vec(-1e6f64..1e6, 3), lines in block_src(2), seed in any::<u64>()) {
        let src = format!(
            "def f(a, b, c):\n{}\n",
            lines.iter().map(|l| format!("    {l}")).collect::<Vec<_>>().join("\n")
        );
        let def = parse_function(&src).unwrap();
        // Bind the generic body to a three-variable continuous task.
        let p = PolicyProgram {
            task: TaskId::Pendulum,
            source_text: src,
            name: def.name,
            params: def.params,
            uses_random_fallback: false,
            body: def.body,
        };
        let out = evaluate(&p, &Observation(obs), &mut ChaCha8Rng::seed_from_u64(seed));
        if let PolicyResult::Action(Action::Continuous(v)) = out.result {
            prop_assert!((-2.0..=2.0).contains(&v));
        }
    }
}
