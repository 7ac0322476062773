mod common;

use std::sync::Mutex;

use common::fixtures;
use common::scripted::{staged, BALANCE, BROKEN, LEAN, LEFT};
use policy_refine::dsl::parse;
use policy_refine::env::TaskId;
use policy_refine::llm::{ChatBackend, ChatRequest, FnBackend, LlmError, ScriptedBackend};
use policy_refine::prompt::{Ablation, Stage};
use policy_refine::refine::{
    evaluate_strategy, read_records, replay, run_batch, run_replication, FrozenClock, LoopConfig, RecordSink,
    Reply, RunRecord, RunStatus,
};

fn cartpole(epochs: usize) -> LoopConfig {
    let mut c = LoopConfig::for_task(TaskId::CartPole, "mock");
    c.epochs = epochs;
    c.eval_episodes = 5;
    c.seed_root = 11;
    c
}

fn run(config: &LoopConfig, backend: &dyn ChatBackend) -> RunRecord {
    run_replication(config, backend, 0, &FrozenClock).unwrap()
}

#[test]
fn scripted_transcript_drives_a_full_replication() {
    let record = run(&fixtures::config(), &fixtures::backend());
    assert_eq!(record.status, RunStatus::Completed);
    assert_eq!(record.strategies.len(), 4);
    assert_eq!(record.transcript.len(), 12);

    let prompts: Vec<&str> = record.transcript.iter().map(|e| e.prompt.as_str()).collect();
    assert_eq!(
        prompts[..3],
        [fixtures::P1_PROMPT, fixtures::P2_PROMPT, fixtures::P3_PROMPT]
    );
    let first = &record.strategies[0];
    assert_eq!(first.rules_text, fixtures::P2_RULES);
    let spec = TaskId::CartPoleStar2.spec();
    assert_eq!(
        first.program.body,
        parse(fixtures::ITER0_PROGRAM, &spec).unwrap().body
    );
    assert!(first.program.uses_random_fallback);

    let invalid = record
        .strategies
        .iter()
        .find(|s| s.invalid_action.is_some())
        .expect("an iteration produced an invalid action");
    assert_eq!(invalid.invalid_action.as_deref(), Some("None"));
    let reflection_after = &record.transcript[3 * (invalid.iteration + 1)];
    assert_eq!(reflection_after.stage, Stage::Reflection);
    assert!(reflection_after
        .prompt
        .ends_with("it should be 1 (left) or 2 (right) but it was None"));
    assert!(record
        .strategies
        .iter()
        .flat_map(|s| s.window.lines())
        .any(|l| l.ends_with("];None")));

    let rewards = record.rewards();
    let best: Vec<f64> = rewards
        .iter()
        .scan(f64::MIN, |m, &r| {
            *m = m.max(r);
            Some(*m)
        })
        .collect();
    assert!(best.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(rewards[3], 500.0);
    assert!(rewards[0] < 100.0, "iteration 0 should fail early: {rewards:?}");
    assert!(record.transcript[9]
        .prompt
        .contains("You already tried 3 different strategies , and the sequence of rewards was: ["));
    assert_eq!(fixtures::LABELLED_MEANS.len(), record.strategies.len());
}

#[test]
fn stop_on_max_ends_the_replication() {
    let mut config = fixtures::config();
    config.epochs = 10;
    let record = run(&config, &fixtures::backend());
    assert_eq!(record.strategies.len(), 4);
    config.stop_on_max = false;
    let record = run(&config, &fixtures::backend());
    assert_eq!(record.status, RunStatus::AbortedBackend);
    assert_eq!(record.strategies.len(), 4);
}

#[test]
fn optimal_first_policy_stops_immediately() {
    let record = run(&cartpole(100), &staged(vec![BALANCE]));
    assert_eq!(record.status, RunStatus::Completed);
    assert_eq!(record.rewards(), vec![500.0]);
    assert_eq!(record.transcript.len(), 3);
}

#[test]
fn single_episode_mean_is_that_return() {
    let mut config = cartpole(1);
    config.eval_episodes = 1;
    let record = run(&config, &staged(vec![LEAN]));
    let s = &record.strategies[0];
    assert_eq!(s.episode_returns.len(), 1);
    assert_eq!(s.mean_reward, s.episode_returns[0]);
}

#[test]
fn runs_and_replays_are_byte_identical() {
    let config = fixtures::config();
    let a = run(&config, &fixtures::backend()).to_json();
    let b = run(&config, &fixtures::backend()).to_json();
    assert_eq!(a, b);
    let record: RunRecord = serde_json::from_str(&a).unwrap();
    assert_eq!(replay(&record, &FrozenClock).unwrap().to_json(), a);
}

#[test]
fn repair_budget_boundary() {
    let mut nine_bad = vec![BROKEN; 9];
    nine_bad.push(LEAN);
    let record = run(&cartpole(1), &staged(nine_bad));
    assert_eq!(record.status, RunStatus::Completed);
    assert_eq!(record.strategies[0].repair_attempts, 10);
    let repairs = record
        .transcript
        .iter()
        .filter(|e| e.stage == Stage::Repair)
        .count();
    assert_eq!(repairs, 9);

    let record = run(&cartpole(1), &staged(vec![BROKEN; 10]));
    assert_eq!(record.status, RunStatus::AbortedRepairBudget);
    assert!(record.strategies.is_empty());
    assert_eq!(record.rejected_code.len(), 10);
    assert!(record.rejected_code.iter().all(|a| a.error.is_some()));
}

#[test]
fn backend_failures_retry_once() {
    let good = ["strategy", "IF pole_angle > 0 THEN 1\nELSE 0", LEAN];
    let flaky = ScriptedBackend::from_results(
        std::iter::once(Err(LlmError::Transport("reset".into()))).chain(good.map(|s| Ok(s.into()))),
    );
    let record = run(&cartpole(1), &flaky);
    assert_eq!(record.status, RunStatus::Completed);
    assert!(matches!(record.transcript[0].reply, Reply::Error(_)));
    assert_eq!(record.transcript[0].prompt, record.transcript[1].prompt);

    let down = ScriptedBackend::from_results(vec![
        Err(LlmError::Status {
            status: 503,
            body: "busy".into(),
        }),
        Err(LlmError::Timeout(std::time::Duration::from_secs(1))),
    ]);
    let record = run(&cartpole(1), &down);
    assert_eq!(record.status, RunStatus::AbortedBackend);
    assert!(record.abort_reason.unwrap().contains("timed out"));
}

#[test]
fn context_overflow_shrinks_the_window() {
    let inner = staged(vec![LEFT]);
    let backend = FnBackend::new(move |req: &ChatRequest| {
        let window_lines = req
            .prompt()
            .lines()
            .filter(|l| l.starts_with('[') && l.contains("];"))
            .count();
        if window_lines > 4 {
            return Err(LlmError::ContextLength(format!("{window_lines} lines")));
        }
        inner.complete(req).map(|r| r.text)
    });
    let record = run(&cartpole(2), &backend);
    assert_eq!(record.status, RunStatus::Completed);
    let windows: Vec<usize> = record
        .transcript
        .iter()
        .filter(|e| e.stage == Stage::Reflection)
        .map(|e| {
            e.prompt
                .lines()
                .filter(|l| l.starts_with('[') && l.contains("];"))
                .count()
        })
        .collect();
    // Limits 20, 10, 5, 2 applied to the first strategy's window.
    let w = record.strategies[0].window.len();
    let expected: Vec<usize> = [20, 10, 5, 2]
        .iter()
        .map(|&l| w.min(l))
        .scan(false, |fitted, n| {
            let out = (!*fitted).then_some(n);
            *fitted |= n <= 4;
            out
        })
        .collect();
    assert_eq!(windows, expected);
}

#[test]
fn no_data_ablation_still_produces_programs() {
    let mut config = cartpole(3);
    config.ablation = Ablation::NoData;
    let record = run(&config, &staged(vec![LEFT, LEAN, LEFT]));
    assert_eq!(record.status, RunStatus::Completed);
    assert_eq!(record.strategies.len(), 3);
    for e in record.transcript.iter().filter(|e| e.stage == Stage::Reflection) {
        assert!(!e.prompt.contains("strategy was this one"));
        assert!(!e.prompt.contains("You already tried"));
    }
}

#[test]
fn memory_tracks_previous_and_best() {
    let mut config = cartpole(5);
    config.stop_on_max = false;
    let record = run(&config, &staged(vec![LEAN, BALANCE, LEFT, LEAN, LEFT]));
    let s = &record.strategies;
    assert_eq!(s.len(), 5);
    assert!(s[1].mean_reward > s[2].mean_reward, "regression expected");
    let reflections: Vec<&str> = record
        .transcript
        .iter()
        .filter(|e| e.stage == Stage::Reflection)
        .map(|e| e.prompt.as_str())
        .collect();
    for (k, prompt) in reflections.iter().enumerate().skip(1) {
        // Prompt k is written after strategies 0..=k.
        let previous = format!(
            "Your previous overall strategy was this one:\n{}\n",
            s[k - 1].rules_text
        );
        assert!(prompt.contains(&previous), "reflection {k}");
        let best = (0..=k).fold(0, |b, i| if s[i].mean_reward > s[b].mean_reward { i } else { b });
        let best_block = format!(
            "Your best overall strategy so far was this one:\n{}\n",
            s[best].rules_text
        );
        assert!(prompt.contains(&best_block), "reflection {k}");
    }
    assert!(reflections[2].contains(&format!("so far was this one:\n{}\n", s[1].rules_text)));
}

#[test]
fn episode_seeds_are_pure() {
    let config = cartpole(1);
    let program = parse(LEAN, &TaskId::CartPole.spec()).unwrap();
    let a = evaluate_strategy(&config, 2, 3, &program);
    assert_eq!(a, evaluate_strategy(&config, 2, 3, &program));
    assert_ne!(a.returns, evaluate_strategy(&config, 3, 3, &program).returns);
    let worst = a.returns.iter().cloned().fold(f64::MAX, f64::min);
    assert_eq!(a.returns[a.window.source_episode], worst);
    assert_eq!(a.window.episode_return, worst);
}

#[test]
fn batch_isolates_failures_and_persists_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    let sink = RecordSink::append(&path).unwrap();
    let configs: Vec<LoopConfig> = [0.0, 0.8]
        .iter()
        .map(|&t| {
            let mut c = cartpole(2);
            c.temperature = t;
            c
        })
        .collect();
    let calls = Mutex::new(0);
    let records = run_batch(
        &configs,
        10,
        |config, replication| -> Box<dyn ChatBackend> {
            *calls.lock().unwrap() += 1;
            if config.temperature > 0.0 && replication == 3 {
                Box::new(staged(vec![BROKEN]))
            } else {
                Box::new(staged(vec![LEFT, LEAN]))
            }
        },
        Some(&sink),
        &FrozenClock,
    );
    drop(sink);
    assert_eq!(records.len(), 20);
    assert_eq!(*calls.lock().unwrap(), 20);
    let aborted: Vec<_> = records
        .iter()
        .filter(|r| r.status != RunStatus::Completed)
        .collect();
    assert_eq!(aborted.len(), 1);
    assert_eq!((aborted[0].config.temperature, aborted[0].replication), (0.8, 3));
    assert_eq!(records[13].replication, 3);

    let mut stored = read_records(&path).unwrap();
    assert_eq!(stored.len(), 20);
    stored.sort_by(|a, b| {
        a.config
            .temperature
            .total_cmp(&b.config.temperature)
            .then(a.replication.cmp(&b.replication))
    });
    assert_eq!(stored, records);
}
